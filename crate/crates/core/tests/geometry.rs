use fracma::potentials::{Potential, QuasiDistance, Sym};
use fracma::sections::{
    build_section, doubling_estimate, phi_energy_bound, quasi_triangle_estimate, tensor_section_inclusions,
    HPotential, SectionQuad, TPoint, TensorPotential, TensorQuad, TensorSection,
};
use fracma::special_fn::gamma;
use fracma::verification::{poincare_check, QuadraticField};
use proptest::prelude::*;

fn presets() -> Vec<Potential> {
    vec![
        Potential::quad(0.7, 1).unwrap(),
        Potential::quad(1.3, 2).unwrap(),
        Potential::aniso(Sym::new2(2.0, 0.4, 1.0)).unwrap(),
        Potential::power1d(3.0).unwrap(),
        Potential::perturbed_quad(0.3, 2).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn delta_is_nonnegative_and_vanishes_on_the_diagonal(
        k in 0usize..5, a in -1.5f64..1.5, b in -1.5f64..1.5, c in -1.5f64..1.5, d in -1.5f64..1.5,
    ) {
        let phi = &presets()[k];
        let n = phi.dim();
        let x0 = [a, b];
        let x = [c, d];
        prop_assert!(phi.delta(&x0[..n], &x[..n]) >= -1e-14);
        prop_assert!(phi.delta(&x0[..n], &x0[..n]).abs() < 1e-14);
    }

    #[test]
    fn quadratic_delta_is_a_scaled_square(c in 0.1f64..3.0, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let phi = Potential::quad(c, 1).unwrap();
        let want = c * (a - b) * (a - b);
        prop_assert!((phi.delta(&[a], &[b]) - want).abs() <= 1e-12 * (1.0 + want));
    }

    #[test]
    fn gradient_matches_differences(k in 0usize..5, a in -1.0f64..1.0, b in -1.0f64..1.0) {
        let phi = &presets()[k];
        let n = phi.dim();
        let x = [a, b];
        let g = phi.gradient(&x[..n]);
        for i in 0..n {
            let h = 1e-5;
            let mut xp = x;
            let mut xm = x;
            xp[i] += h;
            xm[i] -= h;
            let fd = (phi.value(&xp[..n]) - phi.value(&xm[..n])) / (2.0 * h);
            prop_assert!((fd - g[i]).abs() < 1e-7 * (1.0 + g[i].abs()));
        }
    }

    #[test]
    fn monge_ampere_density_is_hessian_determinant(k in 0usize..5, a in -1.0f64..1.0, b in -1.0f64..1.0) {
        let phi = &presets()[k];
        let n = phi.dim();
        let x = [a, b];
        if let Ok(h) = phi.hessian(&x[..n]) {
            prop_assert!((phi.mu_density(&x[..n]).unwrap() - h.det()).abs() < 1e-12 * (1.0 + h.det()));
        }
    }

    #[test]
    fn h_delta_is_nonnegative(s in 0.05f64..0.95, z0 in -2.0f64..2.0, z in -2.0f64..2.0) {
        let h = HPotential::new(s).unwrap();
        prop_assert!(h.delta(z0, z) >= -1e-12 * (1.0 + h.value(z) + h.value(z0)));
    }

    #[test]
    fn section_nodes_lie_inside(k in 0usize..5, r in 0.1f64..1.0) {
        let phi = &presets()[k];
        let n = phi.dim();
        let sec = build_section(phi, &[0.1, -0.05][..n], r, 16).unwrap();
        for (p, &on_boundary) in sec.mesh.nodes.iter().zip(&sec.mesh.boundary) {
            let d = sec.delta_from_center(&p[..n]);
            if on_boundary {
                prop_assert!((d - r).abs() < 1e-9 * r);
            } else {
                prop_assert!(d < r);
            }
        }
    }
}

#[test]
fn quasi_triangle_constant_of_a_quadratic_is_two() {
    // δ = |x−y|², and |x−y|² ≤ 2(|x−z|² + |z−y|²) with equality at the midpoint
    let phi = Potential::quad(1.0, 1).unwrap();
    let triples: Vec<_> = (1..50).map(|k| (vec![0.0], vec![k as f64 / 10.0], vec![k as f64 / 20.0])).collect();
    let k = quasi_triangle_estimate(&phi, &triples).unwrap();
    assert!((k - 2.0).abs() < 1e-12);
    assert_eq!(QuasiDistance::dim(&phi), 1);
}

#[test]
fn doubling_constant_of_quadratics_is_two_to_the_n() {
    let q = SectionQuad::default();
    for (phi, want) in [(Potential::quad(1.0, 1).unwrap(), 2.0), (Potential::aniso(Sym::new2(1.5, 0.2, 0.8)).unwrap(), 4.0)] {
        let n = phi.dim();
        let samples = vec![([0.0, 0.0], 1.0), ([0.3, -0.2], 0.4)];
        let kd = doubling_estimate(&phi, &samples, &q).unwrap();
        assert!((kd - want).abs() < 1e-3, "n = {n}: {kd}");
    }
}

#[test]
fn phi_energy_of_a_one_dimensional_quadratic_is_two_thirds_of_the_bound() {
    // ∫ (2cx)²/(2c)·2c dx over |x| < a = √(R/c) is 8c²a³/3 = (2R/3)·μ(S)
    let phi = Potential::quad(0.8, 1).unwrap();
    let sec = build_section(&phi, &[0.2], 0.6, 16).unwrap();
    let (lhs, bound) = phi_energy_bound(&sec, &SectionQuad::default()).unwrap();
    assert!((lhs / bound - 2.0 / 3.0).abs() < 1e-10, "{}", lhs / bound);
}

#[test]
fn tensor_sections_sit_between_products() {
    for s in [0.25, 0.5, 0.8] {
        let t = TensorPotential::new(Potential::perturbed_quad(0.2, 2).unwrap(), s).unwrap();
        let rep = tensor_section_inclusions(&t, &TPoint::new([0.1, 0.0], 0.2), 0.5, 4000, 7).unwrap();
        assert!(rep.violations.is_empty(), "s = {s}: {:?}", rep.violations.first());
        assert!(rep.in_tensor_section > 0 && rep.in_product >= rep.in_tensor_section);
    }
}

fn beta(a: f64, b: f64) -> f64 {
    gamma(a).unwrap() * gamma(b).unwrap() / gamma(a + b).unwrap()
}

/// For `φ = x²/2` (so `μ_φ = 1`) and `S_Φ((0,0), R)`, substituting
/// `u = c z^{1/s}/R`, `c = s²/(1−s)`, gives
/// `∫_0^{z_R} √(R − c z^{1/s}) z^m dz = √R s (R/c)^{s(m+1)} B(s(m+1), 3/2)`.
fn slab_moment(s: f64, r: f64, m: f64) -> f64 {
    let c = s * s / (1.0 - s);
    r.sqrt() * s * (r / c).powf(s * (m + 1.0)) * beta(s * (m + 1.0), 1.5)
}

#[test]
fn poincare_ratio_of_linear_z_matches_closed_form() {
    let q = TensorQuad::default();
    for s in [0.3, 0.5, 0.7] {
        let r = 0.4;
        let k2 = 2.0;
        let wexp = 1.0 / s - 2.0;
        let t = TensorPotential::new(Potential::quad(0.5, 1).unwrap(), s).unwrap();
        let sec = TensorSection::new(t, TPoint::new([0.0; 2], 0.0), r).unwrap();
        let rep = poincare_check(&sec, k2, &QuadraticField::linear_z(), &q).unwrap();
        // G = z has mean zero; |∇^Φ z|² dμ_Φ is Lebesgue measure
        let lhs = slab_moment(s, r, wexp + 1.0) / slab_moment(s, r, wexp);
        let kernel = r.sqrt() * (slab_moment(s, k2 * r, 0.0) / slab_moment(s, k2 * r, wexp)).sqrt();
        assert!((rep.lhs / lhs - 1.0).abs() < 1e-6, "s = {s}: {} vs {lhs}", rep.lhs);
        assert!((rep.kernel / kernel - 1.0).abs() < 1e-6, "s = {s}: {} vs {kernel}", rep.kernel);
    }
}

#[test]
fn tensor_measure_matches_closed_form() {
    let q = TensorQuad::default();
    for s in [0.2, 0.5, 0.9] {
        let r = 0.7;
        let t = TensorPotential::new(Potential::quad(0.5, 1).unwrap(), s).unwrap();
        let sec = TensorSection::new(t, TPoint::new([0.0; 2], 0.0), r).unwrap();
        // x-slices have length 2√(2ρ), and the z-range is symmetric
        let want = 4.0 * 2f64.sqrt() * slab_moment(s, r, 1.0 / s - 2.0);
        let got = sec.mu_measure(&q).unwrap();
        assert!((got / want - 1.0).abs() < 1e-8, "s = {s}: {got} vs {want}");
    }
}
