//! Extension energies in the `y` and `z` forms against the trace pairing.

use fracma::discrete_ops::{assemble, eig};
use fracma::extension::{default_y_grid, energy_identity_check, finite_energy_check, z_of_y};
use fracma::potentials::Potential;
use fracma::sections::build_section;
use fracma::special_fn::frac_params;
use rand::{Rng, SeedableRng};

fn main() -> fracma::Result<()> {
    let phi = Potential::perturbed_quad(0.3, 1)?;
    let sec = build_section(&phi, &[0.0], 0.8, 400)?;
    let ops = assemble(&sec)?;
    let basis = eig(&ops, ops.len())?;
    let grid = default_y_grid(&basis)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let c: Vec<f64> = (0..basis.len()).map(|k| if k < 50 { rng.gen_range(-1.0..1.0) } else { 0.0 }).collect();
    let u = basis.synthesize(&c);
    println!("s     y-gap       z-gap       z/y ratio          (2s)^(2s-1)");
    for s in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let y = energy_identity_check(&basis, s, &u, Some(50), &grid)?;
        let zg: Vec<f64> = grid.iter().map(|&t| z_of_y(s, t)).collect();
        let z = finite_energy_check(&basis, s, &u, Some(50), &zg)?;
        println!(
            "{s:<5} {:<11.3e} {:<11.3e} {:<18.15} {:.15}",
            y.relative_gap,
            z.relative_gap,
            z.lhs / y.lhs,
            frac_params(s)?.z_to_y_factor()
        );
    }
    Ok(())
}
