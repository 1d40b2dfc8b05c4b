use fracma::discrete_ops::{assemble, eig, DiscreteOperators, SpectralBasis};
use fracma::fractional::{
    frac_apply_semigroup, frac_apply_spectral, frac_solve_semigroup, frac_solve_spectral, interpolation_check,
    max_principle_check, scalar_power_quadrature, Provenance, SemigroupQuad,
};
use fracma::potentials::Potential;
use fracma::sections::build_section;
use proptest::prelude::*;

fn setup(phi: Potential, x0: &[f64], r: f64, n: usize) -> (DiscreteOperators, SpectralBasis) {
    let sec = build_section(&phi, x0, r, n).unwrap();
    let ops = assemble(&sec).unwrap();
    let b = eig(&ops, ops.len()).unwrap();
    (ops, b)
}

fn rel(ops: &DiscreteOperators, a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    ops.m_norm(&d) / ops.m_norm(b)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scalar_quadrature_reproduces_powers(s in 0.05f64..0.95, e in 0.0f64..6.0) {
        let (l1, lmax) = (2.0, 2e6);
        let lambda = l1 * 10f64.powf(e);
        let got = scalar_power_quadrature(lambda, s, l1, lmax, &SemigroupQuad::eigen_exp()).unwrap();
        prop_assert!((got / lambda.powf(s) - 1.0).abs() < 1e-8, "λ {lambda} s {s}: {got}");
    }

    #[test]
    fn spectral_apply_and_solve_are_inverse(s in 0.05f64..0.95, seed in 0u64..1000) {
        let (ops, b) = setup(Potential::quad(1.0, 1).unwrap(), &[0.0], 1.0, 60);
        let mut x = seed as f64;
        let v: Vec<f64> = (0..ops.len()).map(|_| { x = (x * 1.618 + 0.37).fract(); x - 0.5 }).collect();
        let w = frac_solve_spectral(&b, s, &frac_apply_spectral(&b, s, &v).unwrap().values).unwrap();
        prop_assert!(rel(&ops, &w.values, &v) < 1e-10);
    }

    #[test]
    fn powers_compose(s in 0.05f64..0.45, t in 0.05f64..0.45) {
        let (ops, b) = setup(Potential::power1d(3.0).unwrap(), &[0.2], 0.5, 40);
        let v = ops.sample(|x| (3.0 * x[0]).sin() + 0.2);
        let a = frac_apply_spectral(&b, s, &frac_apply_spectral(&b, t, &v).unwrap().values).unwrap();
        let c = frac_apply_spectral(&b, s + t, &v).unwrap();
        prop_assert!(rel(&ops, &a.values, &c.values) < 1e-10);
    }
}

#[test]
fn order_near_one_approaches_the_operator() {
    let (ops, b) = setup(Potential::quad(1.0, 1).unwrap(), &[0.0], 1.0, 400);
    // low-mode datum: λ^{−0.01} stays within 2% of one
    let v = b.synthesize(&[1.0, -0.5, 0.25]);
    let lv = ops.apply_l(&v);
    let near = frac_apply_spectral(&b, 0.99, &v).unwrap();
    assert!(rel(&ops, &near.values, &lv) < 0.02);
    let (semi, _) = frac_apply_semigroup(&ops, None, 0.99, &v, &SemigroupQuad::crank_nicolson()).unwrap();
    assert!(rel(&ops, &semi.values, &lv) < 0.02);
}

#[test]
fn semigroup_routes_match_the_spectral_route() {
    let (ops, b) = setup(Potential::perturbed_quad(0.5, 1).unwrap(), &[0.1], 0.7, 300);
    let v = ops.sample(|x| ops.section.height_deficit(&x[..1]) * (1.0 + 0.4 * (2.0 * x[0]).cos()));
    for s in [0.2, 0.5, 0.85] {
        let sp = frac_apply_spectral(&b, s, &v).unwrap();
        let (ee, rep) = frac_apply_semigroup(&ops, Some(&b), s, &v, &SemigroupQuad::eigen_exp()).unwrap();
        assert!(rel(&ops, &ee.values, &sp.values) < 1e-8, "s {s}");
        assert_eq!(ee.provenance, Provenance::Semigroup);
        assert!(rep.error_estimate < 1e-10);
        let (cn, _) = frac_apply_semigroup(&ops, None, s, &v, &SemigroupQuad::crank_nicolson()).unwrap();
        assert!(rel(&ops, &cn.values, &sp.values) < 1e-3, "s {s}");
        let sp = frac_solve_spectral(&b, s, &v).unwrap();
        let (cn, _) = frac_solve_semigroup(&ops, None, s, &v, &SemigroupQuad::crank_nicolson()).unwrap();
        assert!(rel(&ops, &cn.values, &sp.values) < 1e-3, "s {s}");
    }
}

#[test]
fn semigroup_round_trip() {
    let (ops, _) = setup(Potential::quad(1.0, 1).unwrap(), &[0.0], 1.0, 200);
    let f = ops.sample(|x| (1.0 - x[0] * x[0]) * (2.0 + x[0]));
    let q = SemigroupQuad::crank_nicolson();
    for s in [0.3, 0.7] {
        let (u, _) = frac_solve_semigroup(&ops, None, s, &f, &q).unwrap();
        let (back, _) = frac_apply_semigroup(&ops, None, s, &u.values, &q).unwrap();
        assert!(rel(&ops, &back.values, &f) < 1e-3, "s {s}");
    }
}

#[test]
fn two_dimensional_semigroup_matches_spectral() {
    let (ops, b) = setup(Potential::perturbed_quad(0.3, 2).unwrap(), &[0.0, 0.1], 0.5, 16);
    let v = ops.sample(|x| ops.section.height_deficit(&x[..2]) * (1.0 + x[0]));
    let s = 0.4;
    let sp = frac_apply_spectral(&b, s, &v).unwrap();
    let (cn, _) = frac_apply_semigroup(&ops, None, s, &v, &SemigroupQuad::crank_nicolson()).unwrap();
    assert!(rel(&ops, &cn.values, &sp.values) < 1e-3);
}

#[test]
fn nonnegative_data_give_nonnegative_solutions() {
    let (ops, b) = setup(Potential::power1d(3.0).unwrap(), &[0.0], 0.4, 150);
    assert!(ops.monotone);
    for (k, s) in [0.1, 0.5, 0.9].into_iter().enumerate() {
        let f = ops.sample(|x| ((k + 2) as f64 * x[0]).sin().max(0.0));
        let u = frac_solve_spectral(&b, s, &f).unwrap();
        assert!(u.values.iter().all(|&x| x >= -1e-13), "s {s}");
    }
}

#[test]
fn maximum_principle_at_interior_zeros() {
    let (ops, b) = setup(Potential::quad(1.0, 1).unwrap(), &[0.0], 1.0, 120);
    for j in [20, 60, 95] {
        let c = ops.nodes[j][0];
        let mut v = ops.sample(|x| (1.0 - x[0] * x[0]) * (x[0] - c).powi(2));
        v[j] = 0.0;
        for s in [0.25, 0.75] {
            let r = max_principle_check(&ops, &b, s, &v, j, 1e-10).unwrap();
            assert!(r.asserted && r.holds, "node {j} s {s}: {}", r.value);
        }
    }
}

#[test]
fn interpolation_inequality_holds() {
    let (ops, b) = setup(Potential::quad(1.0, 1).unwrap(), &[0.0], 1.0, 200);
    let v = ops.sample(|x| (1.0 - x[0] * x[0]).powi(2));
    for s in [0.2, 0.5, 0.8] {
        let r = interpolation_check(&ops, &b, s, &v).unwrap();
        assert!(r.ratio <= 1.0, "s {s}: {}", r.ratio);
    }
}

#[test]
fn orders_outside_the_unit_interval_are_rejected_by_semigroup_routes() {
    let (ops, _) = setup(Potential::quad(1.0, 1).unwrap(), &[0.0], 1.0, 20);
    let v = vec![1.0; ops.len()];
    for s in [0.0, 1.0, 1.5] {
        assert!(frac_apply_semigroup(&ops, None, s, &v, &SemigroupQuad::crank_nicolson()).is_err());
    }
}
