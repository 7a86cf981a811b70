use std::path::Path;
use std::process::Command;

use towpde::cli::{exit_code, run, RunConfig, RunOptions, METADATA_FILE};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_towpde"))
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, text).unwrap();
    path
}

const SOLVE: &str = r#"
command = "solve"
[domain]
kind = "interval"
lo = 0.0
hi = 1.0
[params]
n = 1
eps = 0.1
p = 2.0
T = 0.1
[data]
kind = "linear"
coeffs = [2.0]
"#;

#[test]
fn binary_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SOLVE);
    let out = dir.path().join("out");
    let status = bin()
        .args([
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--quiet",
            "--threads",
            "2",
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    for name in ["solution.csv", METADATA_FILE] {
        let text = std::fs::read_to_string(out.join(name)).unwrap();
        let first = text.lines().next().unwrap();
        assert!(first.contains("schema_version"), "{name}: {first}");
    }
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "command = \"nope\"\n");
    let out = bin()
        .args(["--config", bad.to_str().unwrap(), "--quiet"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    let text = SOLVE.replace("command = \"solve\"", "command = \"simulate\"") + "[mc]\nsamples = 0\nstart = [[0.5]]\n";
    let cfg = write_config(dir.path(), &text);
    let out = bin()
        .args(["--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("M ≥ 2 required"));

    let text = SOLVE.replace("command = \"solve\"", "command = \"elliptic\"") + "[elliptic]\nmax_iter = 1\n";
    let cfg = write_config(dir.path(), &text);
    let out = bin()
        .args(["--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn threads_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SOLVE);
    let status = bin()
        .env("TOWPDE_THREADS", "1")
        .args([
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
            "--quiet",
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
}

#[test]
fn seed_override_changes_estimates_only_when_different() {
    let text = r#"
command = "simulate"
[domain]
kind = "interval"
lo = 0.0
hi = 1.0
[params]
n = 1
eps = 0.2
p = 2.0
T = 0.2
[data]
kind = "linear"
coeffs = [1.0]
[mc]
samples = 500
start = [[0.4]]
player_ii = "random"
"#;
    let config = RunConfig::from_toml_str(text).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let read = |sub: &str, seed: u64| {
        let opts = RunOptions {
            out: Some(dir.path().join(sub)),
            seed: Some(seed),
            quiet: true,
        };
        let res = run(&config, &opts);
        assert_eq!(exit_code(&res), 0);
        std::fs::read(dir.path().join(sub).join("estimates.csv")).unwrap()
    };
    assert_eq!(read("a", 5), read("b", 5));
    assert_ne!(read("a", 5), read("c", 6));
}

#[test]
fn every_command_runs() {
    let configs = [
        SOLVE.to_string(),
        SOLVE.replace("\"solve\"", "\"elliptic\""),
        SOLVE.replace("\"solve\"", "\"simulate\"") + "[mc]\nsamples = 200\nstart = [[0.5]]\ndump_trajectories = true\n",
        r#"
command = "exit-time"
[domain]
kind = "annulus"
center = [0.0, 0.0]
inner_radius = 0.25
outer_radius = 1.0
[params]
n = 2
eps = 0.2
alpha = 0.5
[exit_time]
radii = [0.5]
[mc]
samples = 100
"#
        .to_string(),
        SOLVE.replace("\"solve\"", "\"asymptotics\"") + "[asymptotics]\nlevels = [3, 50]\n",
        SOLVE
            .replace("\"solve\"", "\"converge\"")
            .replace("eps = 0.1", "eps_list = [0.2, 0.1]")
            .replace("kind = \"linear\"\ncoeffs = [2.0]", "kind = \"heat_eigen\""),
        SOLVE.replace("\"solve\"", "\"scan\"") + "[scan]\npairs = 60\n",
    ];
    let expected = [
        "solution.csv",
        "elliptic.csv",
        "trajectories_0.csv",
        "exit_times.csv",
        "asymptotics.csv",
        "error_table.csv",
        "scan.csv",
    ];
    for (text, file) in configs.iter().zip(expected) {
        let config = RunConfig::from_toml_str(text).unwrap_or_else(|e| panic!("{file}: {e}"));
        let dir = tempfile::tempdir().unwrap();
        let opts = RunOptions {
            out: Some(dir.path().to_path_buf()),
            seed: None,
            quiet: true,
        };
        let outcome = run(&config, &opts).unwrap_or_else(|e| panic!("{file}: {e}"));
        assert!(outcome.files.iter().any(|p| p.ends_with(file)), "{file} missing");
        let meta: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join(METADATA_FILE)).unwrap()).unwrap();
        assert_eq!(meta["payload"]["command"], config.command.name());
    }
}
