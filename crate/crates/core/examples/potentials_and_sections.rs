//! Build sections of a few convex potentials and print their size and
//! Monge–Ampère mass.

use fracma::potentials::{Potential, Sym};
use fracma::sections::{build_section, SectionQuad};

fn main() -> fracma::Result<()> {
    let q = SectionQuad::default();
    let cases = [
        (Potential::quad(1.0, 1)?, vec![0.0], 1.0),
        (Potential::power1d(4.0)?, vec![0.5], 0.2),
        (Potential::aniso(Sym::new2(2.0, 0.5, 1.0))?, vec![0.0, 0.0], 0.5),
        (Potential::perturbed_quad(0.3, 2)?, vec![0.2, -0.1], 0.4),
    ];
    println!("{:<40} {:>8} {:>8} {:>12} {:>12}", "potential", "height", "nodes", "|S|", "mu(S)");
    for (phi, x0, r) in cases {
        let sec = build_section(&phi, &x0, r, 48)?;
        println!(
            "{:<40} {:>8.3} {:>8} {:>12.6} {:>12.6}",
            phi.to_string(),
            r,
            sec.mesh.interior_count(),
            sec.lebesgue_measure(&q)?,
            sec.mu_measure(&q)?
        );
    }
    let phi = Potential::aniso(Sym::new2(2.0, 0.5, 1.0))?;
    println!("\ndelta from the origin along the diagonal:");
    for t in [0.1, 0.2, 0.4, 0.8] {
        println!("  t = {t:.1}  delta = {:.6}", phi.delta(&[0.0, 0.0], &[t, t]));
    }
    Ok(())
}
