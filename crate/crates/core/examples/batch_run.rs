//! Runs suites from an inline config through the batch front-end and prints
//! the summary. Artifacts go to a temporary directory unless a path is given.

use fracma::cli::{run, ExperimentConfig};
use std::path::PathBuf;

const CONFIG: &str = r#"
[potential]
preset = "perturbed_quad"
eps = 0.25

[section]
center = [0.1]
height = 0.6
resolution = 600

[run]
s = [0.3, 0.7]
routes = ["spectral", "semigroup", "extension"]
suites = ["constants", "operators", "route_equivalence", "fractional", "neumann_trace", "extension_field", "max_principle"]
"#;

fn main() -> fracma::Result<()> {
    let cfg = ExperimentConfig::from_toml(CONFIG)?;
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("fracma-batch"));
    let summary = run(&cfg, &out)?;
    print!("{}", summary.to_text());
    println!("artifacts in {}", out.display());
    Ok(())
}
