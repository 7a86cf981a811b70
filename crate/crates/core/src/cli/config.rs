use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dpp::{BoundaryData, DEFAULT_ELLIPTIC_TOL, DEFAULT_H_RATIO, DEFAULT_MAX_ITER};
use crate::error::{Error, Result};
use crate::geometry::{Domain, GameParams};
use crate::quadrature::{default_direction_count, DirectionSet, Refinement, DEFAULT_THETA_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Solve,
    Elliptic,
    Simulate,
    ExitTime,
    Asymptotics,
    Converge,
    Scan,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Elliptic => "elliptic",
            Command::Simulate => "simulate",
            Command::ExitTime => "exit-time",
            Command::Asymptotics => "asymptotics",
            Command::Converge => "converge",
            Command::Scan => "scan",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_list: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(rename = "T", alias = "horizon", default = "default_horizon")]
    pub horizon: f64,
}

fn default_horizon() -> f64 {
    1.0
}

/// Built-in payoff functions F(x, t).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSpec {
    Constant {
        value: f64,
    },
    /// offset + ⟨coeffs, x⟩ + time_coeff·t
    Linear {
        coeffs: Vec<f64>,
        #[serde(default)]
        offset: f64,
        #[serde(default)]
        time_coeff: f64,
    },
    HeatEigen,
    /// φ_init up to t = ε²/2, then a linear blend to the stationary ψ by t = ε².
    Ramp {
        psi: Box<DataSpec>,
        phi: Box<DataSpec>,
    },
}

impl DataSpec {
    fn validate(&self, n: usize, nested: bool) -> Result<()> {
        match self {
            DataSpec::Constant { value } if !value.is_finite() => {
                Err(Error::Config("constant data must be finite".into()))
            }
            DataSpec::Linear { coeffs, .. } if coeffs.len() != n => Err(Error::Config(format!(
                "linear data needs {n} coefficients, got {}",
                coeffs.len()
            ))),
            DataSpec::HeatEigen if n != 1 => Err(Error::Config("heat_eigen data needs n = 1".into())),
            DataSpec::Ramp { .. } if nested => Err(Error::Config("ramp data cannot be nested".into())),
            DataSpec::Ramp { psi, phi } => {
                psi.validate(n, true)?;
                phi.validate(n, true)
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: &[f64], t: f64) -> f64 {
        match self {
            DataSpec::Constant { value } => *value,
            DataSpec::Linear {
                coeffs,
                offset,
                time_coeff,
            } => offset + coeffs.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + time_coeff * t,
            DataSpec::HeatEigen => crate::analysis::ReferenceSolution::HeatEigen.value(x, t),
            DataSpec::Ramp { psi, .. } => psi.eval(x, t),
        }
    }

    /// Lipschitz constant in |x − y| + |t − s|^½ on [0, horizon].
    pub fn lipschitz(&self, horizon: f64) -> f64 {
        match self {
            DataSpec::Constant { .. } => 0.0,
            DataSpec::Linear { coeffs, time_coeff, .. } => {
                coeffs.iter().map(|c| c * c).sum::<f64>().sqrt() + time_coeff.abs() * horizon.sqrt().max(1.0)
            }
            DataSpec::HeatEigen => crate::analysis::ReferenceSolution::HeatEigen
                .lipschitz(horizon)
                .unwrap_or(0.0),
            DataSpec::Ramp { psi, phi } => psi.lipschitz(horizon).max(phi.lipschitz(horizon)),
        }
    }

    pub fn to_boundary_data(&self, eps: f64, horizon: f64) -> BoundaryData {
        match self {
            DataSpec::Ramp { psi, phi } => {
                let (psi, phi) = ((**psi).clone(), (**phi).clone());
                crate::analysis::ramp_data(move |x| psi.eval(x, 0.0), move |x, t| phi.eval(x, t), eps)
            }
            other => {
                let me = other.clone();
                BoundaryData::new(move |x: &[f64], t: f64| me.eval(x, t))
            }
        }
        .with_lipschitz(self.lipschitz(horizon))
    }

    /// Stationary payoff ψ(x): the ramp target, or the data at t = 0.
    pub fn stationary(&self) -> DataSpec {
        match self {
            DataSpec::Ramp { psi, .. } => (**psi).clone(),
            other => other.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirectionsConfig {
    /// Number of directions; the dimension default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default = "default_theta_tol")]
    pub theta_tol: f64,
    #[serde(default = "default_true")]
    pub refine: bool,
}

impl Default for DirectionsConfig {
    fn default() -> Self {
        DirectionsConfig {
            count: None,
            theta_tol: DEFAULT_THETA_TOL,
            refine: true,
        }
    }
}

fn default_theta_tol() -> f64 {
    DEFAULT_THETA_TOL
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Lattice spacing; overrides `h_ratio`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    /// Lattice spacing as a multiple of ε.
    #[serde(default = "default_h_ratio")]
    pub h_ratio: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            h: None,
            h_ratio: DEFAULT_H_RATIO,
        }
    }
}

fn default_h_ratio() -> f64 {
    DEFAULT_H_RATIO
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Greedy,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Start positions; the game starts at t = T.
    #[serde(default)]
    pub start: Vec<Vec<f64>>,
    #[serde(default = "default_greedy")]
    pub player_i: StrategyKind,
    #[serde(default = "default_greedy")]
    pub player_ii: StrategyKind,
    #[serde(default)]
    pub dump_trajectories: bool,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            samples: default_samples(),
            seed: default_seed(),
            start: Vec::new(),
            player_i: StrategyKind::Greedy,
            player_ii: StrategyKind::Greedy,
            dump_trajectories: false,
        }
    }
}

fn default_samples() -> usize {
    10_000
}

fn default_seed() -> u64 {
    1
}

fn default_greedy() -> StrategyKind {
    StrategyKind::Greedy
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExitTimeConfig {
    /// Start distances from the annulus center, along the first axis.
    pub radii: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EllipticConfig {
    #[serde(default = "default_elliptic_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

impl Default for EllipticConfig {
    fn default() -> Self {
        EllipticConfig {
            tol: DEFAULT_ELLIPTIC_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

fn default_elliptic_tol() -> f64 {
    DEFAULT_ELLIPTIC_TOL
}

fn default_max_iter() -> usize {
    DEFAULT_MAX_ITER
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsymptoticsConfig {
    pub levels: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    #[serde(default = "default_pairs")]
    pub pairs: usize,
    #[serde(default = "default_scan_seed")]
    pub seed: u64,
    #[serde(default = "default_near_radius")]
    pub near_radius: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            pairs: default_pairs(),
            seed: default_scan_seed(),
            near_radius: default_near_radius(),
        }
    }
}

fn default_pairs() -> usize {
    1000
}

fn default_scan_seed() -> u64 {
    20_240_601
}

fn default_near_radius() -> f64 {
    0.3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: default_out_dir() }
    }
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

/// A complete batch run, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub domain: Domain,
    pub params: ParamsConfig,
    /// Payoff F; not used by `exit-time`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<DataSpec>,
    #[serde(default)]
    pub directions: DirectionsConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub mc: McConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exit_time: Option<ExitTimeConfig>,
    #[serde(default)]
    pub elliptic: EllipticConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asymptotics: Option<AsymptoticsConfig>,
    #[serde(default)]
    pub scan: ScanConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// ε values of the run: a list for `converge`, `scan` and `exit-time`, else the single ε.
    pub fn eps_values(&self) -> Result<Vec<f64>> {
        match (&self.params.eps, &self.params.eps_list) {
            (Some(_), Some(_)) => Err(Error::Config("give either eps or eps_list, not both".into())),
            (Some(e), None) => Ok(vec![*e]),
            (None, Some(list)) if !list.is_empty() => Ok(list.clone()),
            _ => Err(Error::Config("missing eps (or eps_list)".into())),
        }
    }

    /// Game parameters at the given ε; p and α must agree when both are given.
    pub fn game_params(&self, eps: f64) -> Result<GameParams> {
        let p = &self.params;
        let params = match (p.p, p.alpha) {
            (Some(pv), None) => GameParams::from_p(p.n, eps, pv, p.horizon)?,
            (None, Some(a)) => GameParams::from_alpha(p.n, eps, a, p.horizon)?,
            (Some(pv), Some(a)) => {
                let params = GameParams::from_p(p.n, eps, pv, p.horizon)?;
                if (params.alpha - a).abs() > 1e-12 {
                    return Err(Error::Config(format!(
                        "p = {pv} gives alpha = {}, inconsistent with alpha = {a}",
                        params.alpha
                    )));
                }
                params
            }
            (None, None) => return Err(Error::Config("give p or alpha".into())),
        };
        Ok(params)
    }

    pub fn direction_set(&self) -> Result<DirectionSet> {
        let d = &self.directions;
        let refinement = if d.refine {
            Refinement::LocalBracket { theta_tol: d.theta_tol }
        } else {
            Refinement::None
        };
        DirectionSet::new(
            self.params.n,
            d.count.unwrap_or(default_direction_count(self.params.n)),
            refinement,
        )
    }

    pub fn data(&self) -> Result<&DataSpec> {
        self.data
            .as_ref()
            .ok_or_else(|| Error::Config("missing [data] section".into()))
    }

    pub fn spacing(&self, eps: f64) -> f64 {
        self.grid.h.unwrap_or(self.grid.h_ratio * eps)
    }

    /// Checks everything that can be checked before any computation.
    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        let n = self.params.n;
        if self.domain.dim() != n {
            return Err(Error::Config(format!(
                "domain has dimension {}, params.n = {n}",
                self.domain.dim()
            )));
        }
        let eps = self.eps_values()?;
        let multi = matches!(self.command, Command::Converge | Command::Scan | Command::ExitTime);
        if eps.len() > 1 && !multi {
            return Err(Error::Config(format!("{} takes a single eps", self.command.name())));
        }
        if self.command == Command::Converge && eps.len() < 2 {
            return Err(Error::Config(
                "converge needs an eps_list with at least 2 values".into(),
            ));
        }
        for &e in &eps {
            self.game_params(e)?;
            let h = self.spacing(e);
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::Config(format!("grid spacing h = {h} must be positive")));
            }
        }
        self.direction_set()?;
        match (&self.data, self.command) {
            (Some(d), _) => d.validate(n, false)?,
            (None, Command::ExitTime) => {}
            (None, _) => return Err(Error::Config("missing [data] section".into())),
        }
        match self.command {
            Command::Simulate => {
                if self.mc.samples < 2 {
                    return Err(Error::Config("M ≥ 2 required".into()));
                }
                if self.mc.start.is_empty() {
                    return Err(Error::Config("simulate needs at least one mc.start point".into()));
                }
                if let Some(x) = self.mc.start.iter().find(|x| x.len() != n) {
                    return Err(Error::Config(format!("start point {x:?} does not have dimension {n}")));
                }
            }
            Command::ExitTime => {
                if self.mc.samples < 2 {
                    return Err(Error::Config("M ≥ 2 required".into()));
                }
                let et = self
                    .exit_time
                    .as_ref()
                    .ok_or_else(|| Error::Config("missing [exit_time] section".into()))?;
                let Domain::Annulus {
                    inner_radius,
                    outer_radius,
                    ..
                } = self.domain
                else {
                    return Err(Error::Config("exit-time needs an annulus domain".into()));
                };
                if et.radii.is_empty() {
                    return Err(Error::Config("exit_time.radii is empty".into()));
                }
                if let Some(r) = et.radii.iter().find(|r| !(**r >= inner_radius && **r <= outer_radius)) {
                    return Err(Error::Config(format!(
                        "start radius {r} outside [delta_ext, outer_radius]"
                    )));
                }
            }
            Command::Asymptotics => {
                let a = self
                    .asymptotics
                    .as_ref()
                    .ok_or_else(|| Error::Config("missing [asymptotics] section".into()))?;
                if a.levels.iter().max().copied().unwrap_or(0) < 3 {
                    return Err(Error::Config("asymptotics.levels needs a level ≥ 3".into()));
                }
            }
            Command::Converge => {
                if !matches!(self.data, Some(DataSpec::HeatEigen)) {
                    return Err(Error::Config(
                        "converge needs heat_eigen data (the closed-form reference)".into(),
                    ));
                }
                if self.grid.h.is_some() {
                    return Err(Error::Config(
                        "converge scales the grid with eps; set grid.h_ratio, not grid.h".into(),
                    ));
                }
            }
            Command::Scan => {
                if self.scan.pairs == 0 {
                    return Err(Error::Config("scan.pairs must be positive".into()));
                }
            }
            Command::Solve | Command::Elliptic => {}
        }
        if matches!(self.command, Command::Elliptic | Command::Asymptotics)
            && !(self.elliptic.tol > 0.0 && self.elliptic.max_iter > 0)
        {
            return Err(Error::Config(
                "elliptic.tol and elliptic.max_iter must be positive".into(),
            ));
        }
        Ok(())
    }
}
