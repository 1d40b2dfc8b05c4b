//! `K_ν(r)` over a range of orders and arguments, with the extension profile
//! `(2^{1−s}/Γ(s)) r^s K_s(r)`.

use fracma::extension::bessel_profile;
use fracma::special_fn::{bessel_k, frac_params};

fn main() -> fracma::Result<()> {
    let rs = [1e-6, 1e-3, 0.1, 1.0, 2.0, 5.0, 20.0, 50.0];
    print!("{:<6}", "nu");
    for r in rs {
        print!(" {r:>12.0e}");
    }
    println!();
    for nu in [0.1, 0.25, 0.5, 0.75, 0.9, 1.5] {
        print!("{nu:<6}");
        for r in rs {
            print!(" {:>12.5e}", bessel_k(nu, r)?);
        }
        println!();
    }
    println!("\nprofile c(r) and constants:");
    for s in [0.25, 0.5, 0.75] {
        let p = frac_params(s)?;
        let vals: Vec<String> = [0.01, 0.1, 1.0, 5.0].iter().map(|&r| bessel_profile(s, r).map(|v| format!("{v:.6}"))).collect::<fracma::Result<_>>()?;
        println!("s = {s}: c = [{}], d_s = {:.12}, c_s = {:.12}", vals.join(", "), p.d_s, p.c_s);
    }
    Ok(())
}
