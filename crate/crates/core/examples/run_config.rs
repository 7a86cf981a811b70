//! Runs a TOML configuration through the batch front-end, as the `towpde`
//! binary does. Usage: cargo run --example run_config -- examples/configs/converge_heat.toml

use std::path::PathBuf;

use towpde::cli::{exit_code, run_file, RunOptions};

fn main() {
    let path = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/examples/configs/converge_heat.toml"
        ))
    });
    let out = std::env::temp_dir().join("towpde-example");
    let result = run_file(
        &path,
        &RunOptions {
            out: Some(out),
            seed: None,
            quiet: false,
        },
    );
    match &result {
        Ok(outcome) => {
            for file in &outcome.files {
                println!("wrote {}", file.display());
            }
            println!("{}", outcome.summary);
        }
        Err(e) => eprintln!("error: {e}"),
    }
    std::process::exit(exit_code(&result));
}
