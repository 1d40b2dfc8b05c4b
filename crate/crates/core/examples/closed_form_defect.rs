//! Compares the spectral `L^s v_φ` with `n^s v_φ^{1−s}` and shows that the
//! gap does not shrink under refinement.

use fracma::discrete_ops::{assemble, eig};
use fracma::extension::closed_form_defect;
use fracma::potentials::Potential;
use fracma::sections::build_section;

fn main() -> fracma::Result<()> {
    let phi = Potential::quad(1.0, 1)?;
    println!("N      s     rel. sup error   worst x");
    for n in [250, 500, 1000, 2000] {
        let sec = build_section(&phi, &[0.0], 1.0, n)?;
        let ops = assemble(&sec)?;
        let basis = eig(&ops, n)?;
        for s in [0.25, 0.5, 0.75] {
            let d = closed_form_defect(&ops, &basis, s, 0.9025)?;
            println!("{n:<6} {s:<5} {:<16.6e} {:.4}", d.relative_sup_error, d.worst_node[0]);
        }
    }
    Ok(())
}
