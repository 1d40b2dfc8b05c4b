//! `L^s v` and `L^{−s} f` by the spectral and semigroup routes.

use fracma::discrete_ops::{assemble, eig};
use fracma::fractional::{
    frac_apply_semigroup, frac_apply_spectral, frac_solve_semigroup, frac_solve_spectral, SemigroupQuad,
};
use fracma::potentials::Potential;
use fracma::sections::build_section;
use std::time::Instant;

fn main() -> fracma::Result<()> {
    let phi = Potential::power1d(3.0)?;
    let sec = build_section(&phi, &[0.1], 0.4, 800)?;
    let ops = assemble(&sec)?;
    let basis = eig(&ops, ops.len())?;
    let v = ops.sample(|x| sec.height_deficit(&x[..1]) * (1.0 + 0.5 * (4.0 * x[0]).sin()));
    let gap = |a: &[f64], b: &[f64]| {
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        ops.m_norm(&d) / ops.m_norm(b)
    };
    println!("s     route            gap to spectral   levels  heat steps  time");
    for s in [0.2, 0.5, 0.8] {
        let sp = frac_apply_spectral(&basis, s, &v)?;
        for (name, q) in [("eigenexp", SemigroupQuad::eigen_exp()), ("crank-nicolson", SemigroupQuad::crank_nicolson())] {
            let t = Instant::now();
            let (w, rep) = frac_apply_semigroup(&ops, Some(&basis), s, &v, &q)?;
            println!(
                "{s:<5} apply {name:<14} {:<17.3e} {:<7} {:<11} {:.2?}",
                gap(&w.values, &sp.values),
                rep.levels,
                rep.heat_steps,
                t.elapsed()
            );
        }
        let sp = frac_solve_spectral(&basis, s, &v)?;
        let t = Instant::now();
        let (w, rep) = frac_solve_semigroup(&ops, None, s, &v, &SemigroupQuad::crank_nicolson())?;
        println!(
            "{s:<5} solve {:<14} {:<17.3e} {:<7} {:<11} {:.2?}",
            "crank-nicolson",
            gap(&w.values, &sp.values),
            rep.levels,
            rep.heat_steps,
            t.elapsed()
        );
    }
    Ok(())
}
