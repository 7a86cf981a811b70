use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use towpde::cli::{exit_code, run_file, RunOptions};

/// Run a towpde batch configuration.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Args {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for Monte Carlo runs and scans.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker thread cap (default: TOWPDE_THREADS, else all cores).
    #[arg(long, env = "TOWPDE_THREADS")]
    threads: Option<usize>,
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Some(k) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("towpde: {e}");
            return ExitCode::from(2);
        }
    }
    let opts = RunOptions {
        out: args.out,
        seed: args.seed,
        quiet: args.quiet,
    };
    let result = run_file(&args.config, &opts);
    if let Err(e) = &result {
        eprintln!("towpde: {e}");
    }
    ExitCode::from(exit_code(&result) as u8)
}
