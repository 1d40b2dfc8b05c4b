//! Harnack constants and Hölder exponents of `L^{−s}f` under mesh refinement.

use fracma::discrete_ops::{assemble, eig};
use fracma::extension::closed_form_example;
use fracma::fractional::frac_solve_spectral;
use fracma::potentials::Potential;
use fracma::sections::build_section;
use fracma::verification::{harnack_quotient, holder_seminorm};

fn main() -> fracma::Result<()> {
    let phi = Potential::power1d(3.0)?;
    let s = 0.4;
    for n in [400, 800] {
        let sec = build_section(&phi, &[0.0], 0.5, n)?;
        let ops = assemble(&sec)?;
        let basis = eig(&ops, n)?;
        let f = closed_form_example(&sec, s)?.claimed_power(&ops.nodes).values;
        let rep = harnack_quotient(&ops, &basis, s, &f, &[0.0], 0.22, &[0.4, 0.2, 0.1], 2.0)?;
        let v = frac_solve_spectral(&basis, s, &f)?.values;
        let fit = holder_seminorm(&ops, &v, n / 2, 0.25)?;
        println!("N = {n}");
        for e in &rep.entries {
            println!("  kappa {:.1}: sup/inf {:.5}, constant {:.5}, nodes {}", e.kappa, e.quotient, e.constant, e.inner_nodes);
        }
        println!("  holder exponent {:.4} (R^2 {:.4}, {} pairs)", fit.exponent.unwrap_or(f64::NAN), fit.r_squared, fit.pairs);
    }
    Ok(())
}
