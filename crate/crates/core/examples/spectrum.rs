//! Discrete spectrum of `L_φ` on a section, against the three-point
//! difference formula in one dimension.

use fracma::discrete_ops::{assemble, eig};
use fracma::potentials::Potential;
use fracma::sections::build_section;
use std::f64::consts::PI;

fn main() -> fracma::Result<()> {
    let n = 200;
    let phi = Potential::quad(1.0, 1)?;
    let sec = build_section(&phi, &[0.0], 1.0, n)?;
    let ops = assemble(&sec)?;
    let basis = eig(&ops, n)?;
    let h = 2.0 / (n + 1) as f64;
    println!("k   lambda_k            formula             continuum");
    for k in [1, 2, 3, 5, 10, 50, 200] {
        let formula = 2.0 / (h * h) * (k as f64 * PI / (2.0 * (n + 1) as f64)).sin().powi(2);
        let cont = (k as f64 * PI / 2.0).powi(2) / 2.0;
        println!("{k:<3} {:<19.12e} {:<19.12e} {:.12e}", basis.values[k - 1], formula, cont);
    }
    println!("orthonormality residual {:.2e}", basis.orthonormality_residual());

    let phi = Potential::perturbed_quad(0.4, 2)?;
    let sec = build_section(&phi, &[0.1, 0.0], 0.5, 32)?;
    let ops = assemble(&sec)?;
    let basis = eig(&ops, ops.len())?;
    println!(
        "\n2D perturbed quadratic: {} unknowns, lambda_1 = {:.6}, lambda_max = {:.3e}, monotone = {}",
        ops.len(),
        basis.values[0],
        basis.values[ops.len() - 1],
        ops.monotone
    );
    Ok(())
}
