//! Weighted Poincaré ratios for random quadratics, a Fabes-type bound for a
//! function vanishing on half the section, and the log-energy bound.

use fracma::discrete_ops::{assemble, eig};
use fracma::extension::{change_variables, default_y_grid, solve_extension_div};
use fracma::potentials::Potential;
use fracma::sections::{build_section, tensor_doubling_estimate, TPoint, TensorPotential, TensorQuad, TensorSection};
use fracma::verification::{fabes_check, log_energy_check, poincare_check, ModeSumField, QuadraticField, RampZ};

fn main() -> fracma::Result<()> {
    let s = 0.5;
    let phi = Potential::quad(1.0, 1)?;
    let t = TensorPotential::new(phi.clone(), s)?;
    let q = TensorQuad::default();
    let center = TPoint::new([0.0, 0.0], 0.0);
    let sec = TensorSection::new(t.clone(), center, 0.3)?;
    let mut k_p: f64 = 0.0;
    for (i, g) in QuadraticField::random_family(10, 4).iter().enumerate() {
        let r = poincare_check(&sec, 2.0, g, &q)?;
        k_p = k_p.max(r.ratio);
        println!("quadratic {i}: ratio {:.4}", r.ratio);
    }
    let ramp = RampZ { z_c: 0.0 };
    k_p = k_p.max(poincare_check(&sec, 2.0, &ramp, &q)?.ratio);
    let fab = fabes_check(&sec, 2.0, &ramp, 0.45, k_p, &q)?;
    println!("K_P >= {k_p:.4}; Fabes: lhs {:.4e}, bound {:.4e}, zero fraction {:.3}, passed {}", fab.lhs, fab.bound, fab.zero_fraction, fab.passed);

    let ps = build_section(&phi, &[0.0], 1.0, 200)?;
    let ops = assemble(&ps)?;
    let basis = eig(&ops, 200)?;
    let mut e1 = basis.vectors[0].clone();
    if e1[100] < 0.0 {
        e1.iter_mut().for_each(|x| *x = -*x);
    }
    let field = change_variables(&solve_extension_div(&basis, s, &e1, &default_y_grid(&basis)?)?);
    let h = ModeSumField::new(&ops, &field, 0.1)?;
    let kd = tensor_doubling_estimate(&t, &[(center, 0.15)], &q)?;
    let log = log_energy_check(&sec, &h, kd, &q)?;
    println!("log energy {:.4e} <= {:.4e}: {}", log.lhs, log.bound, log.passed);
    Ok(())
}
