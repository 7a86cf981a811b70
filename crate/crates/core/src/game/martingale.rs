use serde::Serialize;

use super::GameTrajectory;
use crate::error::{Error, Result};
use crate::geometry::SpaceTimePoint;

/// Two-sided 99% normal quantile.
const Z99: f64 = 2.575_829_303_548_901;

pub const MIN_TRAJECTORIES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepDrift {
    pub step: usize,
    pub samples: usize,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MartingaleReport {
    pub steps: Vec<StepDrift>,
}

impl MartingaleReport {
    pub fn flagged_steps(&self) -> Vec<usize> {
        self.steps.iter().filter(|s| s.flagged).map(|s| s.step).collect()
    }

    pub fn is_clean(&self) -> bool {
        self.steps.iter().all(|s| !s.flagged)
    }

    pub fn max_drift(&self) -> f64 {
        self.steps.iter().map(|s| s.mean).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Per-step mean increments of φ(c_k, Z_k, k) over trajectories still
/// running at step k, with 99% confidence intervals; a step is flagged when
/// its whole interval lies above 0.
pub fn martingale_diagnostic<P>(trajectories: &[GameTrajectory], phi: P) -> Result<MartingaleReport>
where
    P: Fn(u8, &SpaceTimePoint, usize) -> f64,
{
    if trajectories.len() < MIN_TRAJECTORIES {
        return Err(Error::InvalidParams(format!(
            "need at least {MIN_TRAJECTORIES} trajectories, got {}",
            trajectories.len()
        )));
    }
    let longest = trajectories.iter().map(|t| t.states.len()).max().unwrap_or(0);
    let mut steps = Vec::new();
    for k in 0..longest.saturating_sub(1) {
        let incs: Vec<f64> = trajectories
            .iter()
            .filter(|tr| tr.states.len() > k + 1)
            .map(|tr| {
                let (a, b) = (&tr.states[k], &tr.states[k + 1]);
                phi(b.c, &b.z, k + 1) - phi(a.c, &a.z, k)
            })
            .collect();
        if incs.len() < 2 {
            continue;
        }
        let (mean, stderr) = super::mean_and_stderr(&incs);
        let half = Z99 * stderr;
        steps.push(StepDrift {
            step: k,
            samples: incs.len(),
            mean,
            ci_low: mean - half,
            ci_high: mean + half,
            flagged: mean - half > 0.0,
        });
    }
    Ok(MartingaleReport { steps })
}

/// Smallest candidate C for which |x_k − y|² − C k ε² shows no flagged step
/// (candidates are tried in increasing order).
pub fn minimal_drift_constant(
    trajectories: &[GameTrajectory],
    y: &[f64],
    eps: f64,
    candidates: &[f64],
) -> Result<Option<f64>> {
    let mut sorted = candidates.to_vec();
    sorted.sort_by(f64::total_cmp);
    for c in sorted {
        let report = martingale_diagnostic(trajectories, |_, z, k| {
            let d2: f64 = z.x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
            d2 - c * k as f64 * eps * eps
        })?;
        if report.is_clean() {
            return Ok(Some(c));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dpp::BoundaryData;
    use crate::game::{pull_strategy, simulate, HashedRandomStrategy, RngSpec};
    use crate::geometry::{Domain, GameParams};

    #[test]
    fn constant_phi_has_zero_drift() {
        let dom = Domain::ball([0.0, 0.0], 1.0);
        let p = GameParams::from_p(2, 0.2, 3.0, 0.3).unwrap();
        let s = HashedRandomStrategy::new(2, 1);
        let f = BoundaryData::constant(0.0);
        let z0 = SpaceTimePoint::new([0.1, 0.0], 0.3);
        let trs = simulate(&z0, &s, &s, &p, &dom, &f, 200, RngSpec::new(1), |t| t).unwrap();
        let rep = martingale_diagnostic(&trs, |_, _, _| 3.0).unwrap();
        assert!(rep.is_clean());
        assert!(rep.steps.iter().all(|s| s.mean == 0.0));
        assert!(martingale_diagnostic(&trs[..50], |_, _, _| 0.0).is_err());
    }

    #[test]
    fn pulling_to_a_point_needs_a_positive_constant() {
        let dom = Domain::ball([0.0, 0.0], 1.0);
        let p = GameParams::from_p(2, 0.1, 3.0, 0.5).unwrap();
        let y = vec![0.0, 0.0];
        let s_i = pull_strategy(y.clone());
        let s_ii = HashedRandomStrategy::new(2, 4);
        let f = BoundaryData::constant(0.0);
        let z0 = SpaceTimePoint::new([0.05, 0.0], 0.5);
        let trs = simulate(&z0, &s_i, &s_ii, &p, &dom, &f, 2000, RngSpec::new(8), |t| t).unwrap();
        let c = minimal_drift_constant(&trs, &y, p.eps, &[0.0, 0.25, 0.5, 1.0, 2.0, 4.0]).unwrap();
        let c = c.expect("some constant works");
        assert!(c > 0.0 && c <= 2.0, "c = {c}");
    }
}
