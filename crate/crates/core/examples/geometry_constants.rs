//! Doubling constants, tensor-section inclusions and the quasi-distance
//! energy bounds.

use fracma::potentials::Potential;
use fracma::sections::{
    build_section, doubling_estimate, phi_energy_bound, tensor_doubling_estimate, tensor_energy_bound,
    tensor_section_inclusions, SectionQuad, TPoint, TensorPotential, TensorQuad, TensorSection,
};

fn main() -> fracma::Result<()> {
    let q = SectionQuad::default();
    for phi in [Potential::quad(1.0, 1)?, Potential::quad(1.0, 2)?, Potential::power1d(4.0)?, Potential::perturbed_quad(1.0, 2)?] {
        let samples = vec![([0.0, 0.0], 1.0), ([0.3, 0.0], 0.3), ([0.6, 0.1], 0.05)];
        let kd = doubling_estimate(&phi, &samples, &q)?;
        let n = phi.dim();
        let sec = build_section(&phi, &[0.2, 0.1][..n], 0.5, 16)?;
        let (lhs, bound) = phi_energy_bound(&sec, &q)?;
        println!("{:<32} doubling {:.6}   energy/bound {:.4}", phi.to_string(), kd, lhs / bound);
    }
    let tq = TensorQuad::default();
    for s in [0.25, 0.5, 0.75] {
        let t = TensorPotential::new(Potential::quad(0.5, 2)?, s)?;
        let c = TPoint::new([0.0, 0.0], 0.1);
        let inc = tensor_section_inclusions(&t, &c, 0.5, 10_000, 1)?;
        let kd = tensor_doubling_estimate(&t, &[(c, 0.25)], &tq)?;
        let (lhs, bound) = tensor_energy_bound(&TensorSection::new(t, c, 0.25)?, kd, &tq)?;
        println!(
            "s = {s}: inclusion violations {} of {} ({} inside), K_d {:.4}, tensor energy/bound {:.4}",
            inc.violations.len(),
            inc.trials,
            inc.in_tensor_section,
            kd,
            lhs / bound
        );
    }
    Ok(())
}
