//! Extension of a datum in both variables and its Neumann trace by
//! dyadic difference quotients with Richardson extrapolation.

use fracma::discrete_ops::{assemble, eig};
use fracma::extension::{change_variables, default_y_grid, neumann_trace, solve_extension_div, sup_at, TraceMethod};
use fracma::fractional::frac_apply_spectral;
use fracma::potentials::Potential;
use fracma::sections::build_section;

fn main() -> fracma::Result<()> {
    let phi = Potential::quad(1.0, 1)?;
    let sec = build_section(&phi, &[0.0], 1.0, 1000)?;
    let ops = assemble(&sec)?;
    let basis = eig(&ops, ops.len())?;
    let v = ops.sample(|x| (1.0 - x[0] * x[0]) * (1.0 + 0.5 * (3.0 * x[0]).sin()));
    let grid = default_y_grid(&basis)?;
    for s in [0.25, 0.5, 0.75] {
        let u = solve_extension_div(&basis, s, &v, &grid)?;
        let w = change_variables(&u);
        let tr = neumann_trace(&w, &TraceMethod::dyadic())?;
        let want: Vec<f64> = frac_apply_spectral(&basis, s, &v)?.values.iter().map(|x| w.params.d_s * x).collect();
        let d: Vec<f64> = tr.field.values.iter().zip(&want).map(|(a, b)| a - b).collect();
        println!(
            "s = {s}: trace error {:.3e}, observed order {:?}, sup V(., z=1) = {:.4e}",
            ops.m_norm(&d) / ops.m_norm(&want),
            tr.order,
            sup_at(&w, 1.0)?
        );
    }
    Ok(())
}
