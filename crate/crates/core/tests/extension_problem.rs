use fracma::discrete_ops::{assemble, eig, DiscreteOperators, SpectralBasis};
use fracma::extension::{
    bessel_profile, change_variables, closed_form_example, continuity_at_zero, default_y_grid, energy_identity_check,
    finite_energy_check, mode_profile, mode_profile_dy, mode_profile_dz, mode_profile_z, neumann_trace,
    solve_extension_div, sup_at, y_of_z, z_of_y, TraceMethod, Variable,
};
use fracma::fractional::frac_apply_spectral;
use fracma::linalg::sup_norm;
use fracma::potentials::Potential;
use fracma::sections::build_section;
use fracma::special_fn::{frac_params, gamma};
use proptest::prelude::*;

fn setup(n: usize) -> (DiscreteOperators, SpectralBasis) {
    let phi = Potential::quad(1.0, 1).unwrap();
    let sec = build_section(&phi, &[0.0], 1.0, n).unwrap();
    let ops = assemble(&sec).unwrap();
    let b = eig(&ops, ops.len()).unwrap();
    (ops, b)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn variable_change_round_trips(s in 0.05f64..0.95, y in 1e-8f64..50.0) {
        let z = z_of_y(s, y);
        prop_assert!((y_of_z(s, z) / y - 1.0).abs() < 1e-12);
    }

    #[test]
    fn profiles_agree_across_variables(s in 0.05f64..0.95, lam in 0.5f64..1e4, y in 1e-6f64..5.0) {
        let a = mode_profile(s, lam, y).unwrap();
        let b = mode_profile_z(s, lam, z_of_y(s, y)).unwrap();
        prop_assert!((a - b).abs() < 1e-13);
    }

    #[test]
    fn z_derivative_is_the_chain_rule(s in 0.05f64..0.95, lam in 0.5f64..100.0, y in 1e-3f64..3.0) {
        // dz/dy = (y/2s)^{2s−1}
        let z = z_of_y(s, y);
        let dz = mode_profile_dz(s, lam, z).unwrap();
        let dy = mode_profile_dy(s, lam, y).unwrap();
        let jac = (y / (2.0 * s)).powf(2.0 * s - 1.0);
        prop_assert!((dy - dz * jac).abs() <= 1e-10 * (dy.abs() + 1e-300));
    }

    #[test]
    fn profile_is_monotone_from_one_to_zero(s in 0.05f64..0.95, r in 1e-6f64..30.0) {
        let a = bessel_profile(s, r).unwrap();
        let b = bessel_profile(s, 1.05 * r).unwrap();
        prop_assert!(a <= 1.0 && b < a && b > 0.0);
    }
}

#[test]
fn profile_solves_the_weighted_ode() {
    // c'' + (a/y) c' − λ c = 0, checked with fourth-order differences
    for s in [0.2, 0.5, 0.8] {
        let a = 1.0 - 2.0 * s;
        let lam = 3.0;
        for y in [0.05, 0.3, 1.0, 2.5] {
            let h = 1e-3 * y;
            let c = |t: f64| mode_profile(s, lam, t).unwrap();
            let d2 = (-c(y + 2.0 * h) + 16.0 * c(y + h) - 30.0 * c(y) + 16.0 * c(y - h) - c(y - 2.0 * h)) / (12.0 * h * h);
            let d1 = mode_profile_dy(s, lam, y).unwrap();
            let res = d2 + a / y * d1 - lam * c(y);
            assert!(res.abs() < 1e-6 * (lam * c(y) + d2.abs()), "s {s} y {y}: {res}");
        }
    }
}

#[test]
fn extension_is_continuous_at_the_boundary_and_decays() {
    let (ops, b) = setup(200);
    let u = ops.sample(|x| (1.0 - x[0] * x[0]) * (1.0 + 0.5 * (3.0 * x[0]).sin()));
    let grid = default_y_grid(&b).unwrap();
    let lam1 = b.values[0];
    for s in [0.25, 0.5, 0.75] {
        let f = solve_extension_div(&b, s, &u, &grid).unwrap();
        assert_eq!(f.variable, Variable::Y);
        // per mode 1 − c(y) ≤ Γ(1−s)/Γ(1+s)·(√λ y/2)^{2s}, so the gap is
        // bounded by that factor times ‖L^s u‖
        let lsu = ops.m_norm(&frac_apply_spectral(&b, s, &u).unwrap().values);
        let k = gamma(1.0 - s).unwrap() / gamma(1.0 + s).unwrap();
        for y in [1e-2, 1e-4, 1e-6] {
            let d: Vec<f64> = f.at(y).unwrap().iter().zip(&u).map(|(a, b)| a - b).collect();
            let gap = ops.m_norm(&d);
            assert!(gap <= k * (y / 2.0).powf(2.0 * s) * lsu, "s {s} y {y}: {gap}");
            if y == 1e-6 && s >= 0.5 {
                assert!(gap <= 1e-4 * ops.m_norm(&u), "s {s}: {gap}");
            }
        }
        // the pointwise gap shrinks with y
        let gaps = continuity_at_zero(&f, &[1e-2, 1e-4, 1e-6]).unwrap();
        assert!(gaps[2] < gaps[1] && gaps[1] < gaps[0]);
        // every mode profile is below the first one at y = 10/√λ₁
        let y = 10.0 / lam1.sqrt();
        let bound: f64 = f
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c.abs() * sup_norm(&b.vectors[k]))
            .sum::<f64>()
            * mode_profile(s, lam1, y).unwrap();
        assert!(sup_at(&f, y).unwrap() <= bound, "s {s}");
        let w = change_variables(&f);
        assert!(sup_at(&w, z_of_y(s, y)).unwrap() <= bound * (1.0 + 1e-12));
    }
}

#[test]
fn difference_quotient_trace_reproduces_the_fractional_power() {
    let (ops, b) = setup(400);
    let u = ops.sample(|x| (1.0 - x[0] * x[0]) * (1.0 + 0.3 * x[0]));
    let grid = default_y_grid(&b).unwrap();
    for s in [0.3, 0.6] {
        let w = change_variables(&solve_extension_div(&b, s, &u, &grid).unwrap());
        let lsu = frac_apply_spectral(&b, s, &u).unwrap();
        let ds = frac_params(s).unwrap().d_s;
        let want: Vec<f64> = lsu.values.iter().map(|x| ds * x).collect();
        let analytic = neumann_trace(&w, &TraceMethod::Analytic).unwrap();
        let d: Vec<f64> = analytic.field.values.iter().zip(&want).map(|(a, b)| a - b).collect();
        assert!(ops.m_norm(&d) <= 1e-10 * ops.m_norm(&want), "s {s}");
        let dq = neumann_trace(&w, &TraceMethod::dyadic()).unwrap();
        let d: Vec<f64> = dq.field.values.iter().zip(&want).map(|(a, b)| a - b).collect();
        assert!(ops.m_norm(&d) <= 1e-2 * ops.m_norm(&want), "s {s}");
    }
}

#[test]
fn fifty_mode_energies_match_the_trace_pairing() {
    let (_, b) = setup(300);
    let grid = default_y_grid(&b).unwrap();
    let c: Vec<f64> = (0..b.len()).map(|k| if k < 50 { 1.0 / (1.0 + k as f64) } else { 0.0 }).collect();
    let u = b.synthesize(&c);
    for s in [0.2, 0.5, 0.8] {
        let y = energy_identity_check(&b, s, &u, Some(50), &grid).unwrap();
        let zg: Vec<f64> = grid.iter().map(|&t| z_of_y(s, t)).collect();
        let z = finite_energy_check(&b, s, &u, Some(50), &zg).unwrap();
        assert!(y.relative_gap < 1e-4 && z.relative_gap < 1e-4, "s {s}: {} {}", y.relative_gap, z.relative_gap);
        let ratio = z.lhs / y.lhs;
        assert!((ratio - frac_params(s).unwrap().z_to_y_factor()).abs() < 1e-6);
    }
}

#[test]
fn closed_form_extension_satisfies_its_ode_and_boundary_data() {
    let phi = Potential::quad(1.0, 1).unwrap();
    let sec = build_section(&phi, &[0.0], 1.0, 50).unwrap();
    for s in [0.3, 0.5, 0.7] {
        let ex = closed_form_example(&sec, s).unwrap();
        for x in [-0.6, 0.0, 0.4] {
            let p = [x];
            assert!((ex.g(&p, 0.0).unwrap() - 1.0).abs() < 1e-12);
            // −∂_z g at 0⁺ is d_s α^s
            let z = 1e-12;
            let trace = -ex.dg_dz(&p, z).unwrap() * ex.v(&p);
            assert!((trace / ex.trace_exact(&p) - 1.0).abs() < 1e-3, "s {s} x {x}");
            // dg/dz by differences
            let z = 0.2;
            let h = 1e-4;
            let fd = (ex.g(&p, z + h).unwrap() - ex.g(&p, z - h).unwrap()) / (2.0 * h);
            assert!((fd - ex.dg_dz(&p, z).unwrap()).abs() < 1e-7);
        }
    }
}
