use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use fracma::cli::{self, ExperimentConfig, SUITES};
use fracma::Error;

/// Run fractional Monge–Ampère experiment suites from a TOML config.
#[derive(Parser, Debug)]
#[command(name = "fracma", version)]
struct Args {
    /// Experiment config (TOML).
    #[arg(long, required_unless_present = "list_suites")]
    config: Option<PathBuf>,
    /// Output directory; overrides `run.out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated suites; overrides `run.suites`.
    #[arg(long, value_delimiter = ',')]
    suite: Vec<String>,
    /// Overrides `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    list_suites: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    if args.list_suites {
        for (name, crit) in SUITES {
            println!("{name:<20} {}", crit.unwrap_or("-"));
        }
        return ExitCode::SUCCESS;
    }
    let path = args.config.expect("clap enforces --config");
    let mut cfg = match ExperimentConfig::load(&path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if !args.suite.is_empty() {
        cfg.run.suites = args.suite;
    }
    if let Some(seed) = args.seed {
        cfg.run.seed = seed;
    }
    let out = args.out.or_else(|| cfg.run.out.clone().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("fracma-out"));
    match cli::run(&cfg, &out) {
        Ok(summary) => {
            print!("{}", summary.to_text());
            ExitCode::from(summary.exit_code() as u8)
        }
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
