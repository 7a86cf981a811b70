//! Batch front-end: a TOML run configuration dispatched to the library, with
//! CSV data and a JSON metadata record written to an output directory.

mod config;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;
use serde_json::json;

pub use config::{
    AsymptoticsConfig, Command, DataSpec, DirectionsConfig, EllipticConfig, ExitTimeConfig, GridConfig, McConfig,
    OutputConfig, ParamsConfig, RunConfig, ScanConfig, StrategyKind,
};

use crate::analysis::{
    asymptotic_study, boundary_modulus_scan, convergence_study, heat_reference, AsymptoticSetup, RadialW, ScanSpec,
};
use crate::dpp::DppSolver;
use crate::error::{Error, Result};
use crate::game::{
    greedy_strategy, mean_and_stderr, simulate, write_trajectories_csv, AnnulusGame, HashedRandomStrategy, Player,
    RngSpec, Strategy,
};
use crate::geometry::{Domain, GameParams, SpaceTimePoint};
use crate::grid::GridFunction;
use crate::output::{write_csv_table, write_json};
use crate::quadrature::DirectionSet;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const METADATA_FILE: &str = "metadata.json";

/// Overrides applied on top of a [`RunConfig`].
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub quiet: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub summary: serde_json::Value,
}

/// Process exit status for a run result: 0 success, 3 numerical failure,
/// 2 anything else (validation, configuration, I/O).
pub fn exit_code<T>(result: &Result<T>) -> i32 {
    match result {
        Ok(_) => 0,
        Err(e) if e.is_numerical() => 3,
        Err(_) => 2,
    }
}

struct Run<'a> {
    config: &'a RunConfig,
    dir: PathBuf,
    files: Vec<PathBuf>,
    quiet: bool,
}

impl Run<'_> {
    fn log(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("towpde: {}", msg.as_ref());
        }
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.dir.join(name);
        let file = File::create(&path)?;
        self.files.push(path);
        Ok(BufWriter::new(file))
    }

    fn table(&mut self, name: &str, kind: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
        let mut w = self.create(name)?;
        write_csv_table(&mut w, kind, header, rows)?;
        w.flush()?;
        Ok(())
    }

    fn single_params(&self) -> Result<GameParams> {
        self.config.game_params(self.config.eps_values()?[0])
    }

    fn solver(&self, params: &GameParams, dirs: &DirectionSet) -> Result<DppSolver> {
        DppSolver::with_spacing(&self.config.domain, params, dirs, self.config.spacing(params.eps))
    }
}

fn coord_header(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

/// Validates `config`, runs its command and writes the artifacts.
pub fn run(config: &RunConfig, opts: &RunOptions) -> Result<RunOutcome> {
    let start = Instant::now();
    let mut config = config.clone();
    if let Some(seed) = opts.seed {
        config.mc.seed = seed;
        config.scan.seed = seed;
    }
    if let Some(out) = &opts.out {
        config.output.dir = out.clone();
    }
    config.validate()?;
    std::fs::create_dir_all(&config.output.dir)?;
    let mut run = Run {
        config: &config,
        dir: config.output.dir.clone(),
        files: Vec::new(),
        quiet: opts.quiet,
    };
    run.log(format!("{} -> {}", config.command.name(), run.dir.display()));

    let dirs = config.direction_set()?;
    let summary = match config.command {
        Command::Solve => solve(&mut run, &dirs)?,
        Command::Elliptic => elliptic(&mut run, &dirs)?,
        Command::Simulate => simulate_games(&mut run, &dirs)?,
        Command::ExitTime => exit_time(&mut run)?,
        Command::Asymptotics => asymptotics(&mut run, &dirs)?,
        Command::Converge => converge(&mut run, &dirs)?,
        Command::Scan => scan(&mut run, &dirs)?,
    };

    let params: Vec<GameParams> = config
        .eps_values()?
        .iter()
        .map(|&e| config.game_params(e))
        .collect::<Result<_>>()?;
    let names: Vec<String> = run
        .files
        .iter()
        .filter_map(|p| p.file_name())
        .map(|s| s.to_string_lossy().into_owned())
        .collect();
    let meta = Metadata {
        version: VERSION,
        command: config.command.name(),
        config: &config,
        params: &params,
        h: params.iter().map(|p| config.spacing(p.eps)).collect(),
        directions: dirs.len(),
        outputs: names,
        summary: &summary,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    let path = run.dir.join(METADATA_FILE);
    let mut w = BufWriter::new(File::create(&path)?);
    write_json(&mut w, "run_metadata", &meta)?;
    w.flush()?;
    run.files.push(path);
    run.log(format!("done in {:.3} s", meta.wall_time_s));
    Ok(RunOutcome {
        dir: run.dir,
        files: run.files,
        summary,
    })
}

#[derive(Serialize)]
struct Metadata<'a> {
    version: &'a str,
    command: &'a str,
    config: &'a RunConfig,
    params: &'a [GameParams],
    h: Vec<f64>,
    directions: usize,
    outputs: Vec<String>,
    summary: &'a serde_json::Value,
    wall_time_s: f64,
}

fn solve(run: &mut Run, dirs: &DirectionSet) -> Result<serde_json::Value> {
    let params = run.single_params()?;
    let solver = run.solver(&params, dirs)?;
    let f = run.config.data()?.to_boundary_data(params.eps, params.horizon);
    let u = solver.solve(&f)?;
    let residual = solver.residual(&u, &f)?;
    run.log(format!(
        "{} levels, {} nodes, residual {residual:e}",
        u.num_levels(),
        solver.lattice().len()
    ));
    let mut w = run.create("solution.csv")?;
    u.write_csv(&mut w)?;
    w.flush()?;
    Ok(json!({
        "levels": u.num_levels(),
        "nodes": solver.lattice().len(),
        "residual": residual,
        "sup_norm": u.sup_norm(),
    }))
}

fn elliptic(run: &mut Run, dirs: &DirectionSet) -> Result<serde_json::Value> {
    let params = run.single_params()?;
    let solver = run.solver(&params, dirs)?;
    let psi = run.config.data()?.stationary();
    let el = &run.config.elliptic;
    let sol = solver.solve_elliptic(|x| psi.eval(x, 0.0), el.tol, el.max_iter)?;
    run.log(format!("{} iterations, residual {:e}", sol.iterations, sol.residual));
    let n = params.n;
    let rows: Vec<Vec<f64>> = (0..sol.lattice.len())
        .map(|i| {
            let mut row = sol.lattice.node(i);
            row.push(sol.values[i]);
            row
        })
        .collect();
    let mut header = coord_header(n);
    header.push("value".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    run.table("elliptic.csv", "elliptic_solution", &header, &rows)?;
    Ok(json!({
        "iterations": sol.iterations,
        "residual": sol.residual,
        "barrier_gap": sol.barrier_gap,
    }))
}

fn strategy<'a>(
    kind: StrategyKind,
    u: &'a GridFunction,
    player: Player,
    dirs: &DirectionSet,
    seed: u64,
) -> Result<Box<dyn Strategy + 'a>> {
    Ok(match kind {
        StrategyKind::Greedy => Box::new(greedy_strategy(u, player, dirs)?),
        StrategyKind::Random => Box::new(HashedRandomStrategy::new(u.params().n, seed)),
    })
}

fn simulate_games(run: &mut Run, dirs: &DirectionSet) -> Result<serde_json::Value> {
    let params = run.single_params()?;
    let solver = run.solver(&params, dirs)?;
    let f = run.config.data()?.to_boundary_data(params.eps, params.horizon);
    let u = solver.solve(&f)?;
    let mc = run.config.mc.clone();
    let s_i = strategy(mc.player_i, &u, Player::I, dirs, mc.seed ^ 0x5eed_0001)?;
    let s_ii = strategy(mc.player_ii, &u, Player::II, dirs, mc.seed ^ 0x5eed_0002)?;
    let t0 = u.time(u.num_levels() - 1);
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for (i, x0) in mc.start.iter().enumerate() {
        let z0 = SpaceTimePoint::new(x0.clone(), t0);
        let rng = RngSpec::new(mc.seed.wrapping_add(i as u64));
        let trajectories = simulate(
            &z0,
            s_i.as_ref(),
            s_ii.as_ref(),
            &params,
            &run.config.domain,
            &f,
            mc.samples,
            rng,
            |tr| tr,
        )?;
        let payoffs: Vec<f64> = trajectories.iter().map(|tr| tr.payoff).collect();
        let (mean, stderr) = mean_and_stderr(&payoffs);
        let dpp = u.value(x0, t0)?;
        run.log(format!("start {x0:?}: mean {mean:.6} ± {stderr:.2e}, dpp {dpp:.6}"));
        let mut row = x0.clone();
        row.extend([t0, mean, stderr, mc.samples as f64, dpp]);
        rows.push(row);
        records.push(
            json!({ "start": x0, "t0": t0, "mean": mean, "stderr": stderr, "samples": mc.samples, "dpp_value": dpp }),
        );
        if mc.dump_trajectories {
            let mut w = run.create(&format!("trajectories_{i}.csv"))?;
            write_trajectories_csv(&mut w, &trajectories)?;
            w.flush()?;
        }
    }
    let mut header = coord_header(params.n);
    header.extend(["t0", "mean", "stderr", "samples", "dpp_value"].map(String::from));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    run.table("estimates.csv", "value_estimates", &header, &rows)?;
    Ok(json!({ "estimates": records }))
}

fn exit_time(run: &mut Run) -> Result<serde_json::Value> {
    let Domain::Annulus {
        center,
        inner_radius,
        outer_radius,
    } = run.config.domain.clone()
    else {
        return Err(Error::Config("exit-time needs an annulus domain".into()));
    };
    let radii = run
        .config
        .exit_time
        .as_ref()
        .map(|e| e.radii.clone())
        .unwrap_or_default();
    let mut rows = Vec::new();
    let mut fitted = 0.0f64;
    for eps in run.config.eps_values()? {
        let params = run.config.game_params(eps)?;
        let game = AnnulusGame::new(center.clone(), inner_radius, outer_radius, eps, params.alpha)?;
        let w = RadialW::new(params.n, params.alpha, inner_radius, outer_radius, eps).ok();
        for &r0 in &radii {
            let mut x0 = center.clone();
            x0[0] += r0;
            let est = game.estimate(&x0, run.config.mc.samples, RngSpec::new(run.config.mc.seed))?;
            let scaled = eps * eps * est.mean;
            let ratio = scaled / (r0 - inner_radius + eps);
            fitted = fitted.max(ratio);
            let w_r0 = w.as_ref().map_or(Ok(f64::NAN), |w| w.value(r0))?;
            run.log(format!(
                "eps {eps}, r0 {r0}: E[tau] {:.1} ± {:.1}, ratio {ratio:.3}",
                est.mean, est.stderr
            ));
            rows.push(vec![
                eps,
                r0,
                est.mean,
                est.stderr,
                est.samples as f64,
                scaled,
                ratio,
                w_r0,
            ]);
        }
    }
    run.table(
        "exit_times.csv",
        "exit_times",
        &[
            "eps",
            "r0",
            "mean_steps",
            "stderr",
            "samples",
            "eps2_mean",
            "bound_ratio",
            "w_r0",
        ],
        &rows,
    )?;
    Ok(json!({ "fitted_constant": fitted }))
}

fn asymptotics(run: &mut Run, dirs: &DirectionSet) -> Result<serde_json::Value> {
    let params = run.single_params()?;
    let levels = run
        .config
        .asymptotics
        .as_ref()
        .map(|a| a.levels.clone())
        .unwrap_or_default();
    let psi = run.config.data()?.stationary();
    let phi = match run.config.data()? {
        DataSpec::Ramp { phi, .. } => (**phi).clone(),
        other => other.clone(),
    };
    let setup = AsymptoticSetup {
        domain: run.config.domain.clone(),
        params,
        dirs: dirs.clone(),
        h: run.config.spacing(params.eps),
        psi: Arc::new(move |x| psi.eval(x, 0.0)),
        phi_init: Arc::new(move |x, t| phi.eval(x, t)),
        elliptic_tol: run.config.elliptic.tol,
        max_iter: run.config.elliptic.max_iter,
    };
    let rep = asymptotic_study(&setup, &levels)?;
    let rows: Vec<Vec<f64>> = rep.rows.iter().map(|r| vec![r.level as f64, r.t, r.sup_diff]).collect();
    run.table("asymptotics.csv", "asymptotics", &["level", "t", "sup_diff"], &rows)?;
    if let Some(last) = rep.rows.last() {
        run.log(format!("level {}: sup diff {:e}", last.level, last.sup_diff));
    }
    Ok(json!({
        "nonincreasing_after_level_2": rep.nonincreasing_after_level_2,
        "lower_barrier_monotone": rep.lower_barrier_monotone,
        "upper_barrier_monotone": rep.upper_barrier_monotone,
        "elliptic_iterations": rep.elliptic_iterations,
        "elliptic_residual": rep.elliptic_residual,
    }))
}

fn converge(run: &mut Run, dirs: &DirectionSet) -> Result<serde_json::Value> {
    let eps = run.config.eps_values()?;
    let template = run.config.game_params(eps[0])?;
    let reference = heat_reference(template.n, template.p)?;
    let table = convergence_study(
        &run.config.domain,
        &reference,
        &eps,
        &template,
        dirs,
        Some(run.config.grid.h_ratio),
    )?;
    for r in &table.rows {
        run.log(format!("eps {}: sup error {:e}", r.eps, r.sup_error));
    }
    // runtimes vary between runs, so they stay out of the CSV
    let rows: Vec<Vec<f64>> = table.rows.iter().map(|r| vec![r.eps, r.h, r.sup_error]).collect();
    run.table("error_table.csv", "error_table", &["eps", "h", "sup_error"], &rows)?;
    Ok(json!({
        "verdict": table.verdict,
        "improvement": table.improvement(),
        "runtime_s": table.rows.iter().map(|r| r.runtime_s).collect::<Vec<_>>(),
        "reference": reference.name(),
    }))
}

fn scan(run: &mut Run, dirs: &DirectionSet) -> Result<serde_json::Value> {
    let mut rows = Vec::new();
    for eps in run.config.eps_values()? {
        let params = run.config.game_params(eps)?;
        let solver = run.solver(&params, dirs)?;
        let f = run.config.data()?.to_boundary_data(eps, params.horizon);
        let u = solver.solve(&f)?;
        let spec = ScanSpec {
            pairs: run.config.scan.pairs,
            seed: run.config.scan.seed,
            lipschitz: f.lipschitz(),
            near_radius: run.config.scan.near_radius,
        };
        let rep = boundary_modulus_scan(&u, &f, &spec)?;
        run.log(format!("eps {eps}: max ratio {:.4}", rep.max_ratio));
        rows.push(vec![
            eps,
            rep.lipschitz,
            rep.max_ratio,
            rep.max_ratio_lateral,
            rep.max_ratio_initial,
            rep.max_ratio_interior,
            rep.pairs as f64,
        ]);
    }
    let max = rows.iter().map(|r| r[2]).fold(0.0, f64::max);
    let min = rows.iter().map(|r| r[2]).fold(f64::INFINITY, f64::min);
    run.table(
        "scan.csv",
        "boundary_scan",
        &[
            "eps",
            "lipschitz",
            "max_ratio",
            "max_ratio_lateral",
            "max_ratio_initial",
            "max_ratio_interior",
            "pairs",
        ],
        &rows,
    )?;
    Ok(json!({ "max_ratio": max, "drift": max / min }))
}

/// Loads a configuration file and runs it.
pub fn run_file(path: &Path, opts: &RunOptions) -> Result<RunOutcome> {
    run(&RunConfig::load(path)?, opts)
}
