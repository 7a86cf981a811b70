use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use super::ReferenceSolution;
use crate::dpp::{sup_diff, BoundaryData, DppSolver, DEFAULT_H_RATIO};
use crate::error::{Error, Result};
use crate::geometry::{Domain, GameParams, BOUNDARY_TOL};
use crate::quadrature::DirectionSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorRow {
    pub eps: f64,
    pub h: f64,
    pub sup_error: f64,
    pub runtime_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    MonotoneDecreasing,
    /// Index of the first row whose error did not decrease.
    ViolatedAt(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorTable {
    pub rows: Vec<ErrorRow>,
    pub verdict: Verdict,
}

impl ErrorTable {
    /// sup error of the first row over that of the last.
    pub fn improvement(&self) -> f64 {
        match (self.rows.first(), self.rows.last()) {
            (Some(a), Some(b)) => a.sup_error / b.sup_error,
            _ => f64::NAN,
        }
    }
}

/// Sup over lattice nodes in Ω̄ and all levels of |u_ε − reference|, one row
/// per ε (sorted decreasingly), with h = `h_ratio`·ε.
pub fn convergence_study(
    domain: &Domain,
    reference: &ReferenceSolution,
    eps_list: &[f64],
    template: &GameParams,
    dirs: &DirectionSet,
    h_ratio: Option<f64>,
) -> Result<ErrorTable> {
    if eps_list.is_empty() {
        return Err(Error::InvalidParams("empty eps list".into()));
    }
    let mut eps_sorted = eps_list.to_vec();
    eps_sorted.sort_by(|a, b| b.total_cmp(a));
    let ratio = h_ratio.unwrap_or(DEFAULT_H_RATIO);
    let data = reference.boundary_data(template.horizon);
    let mut rows = Vec::new();
    for eps in eps_sorted {
        let start = Instant::now();
        let params = template.with_eps(eps)?;
        let solver = DppSolver::with_spacing(domain, &params, dirs, ratio * eps)?;
        let mut worst = 0.0f64;
        solver.march(&data, |_, t, level| {
            for (i, v) in level.iter().enumerate() {
                if solver.node_distances()[i] >= -BOUNDARY_TOL {
                    worst = worst.max((v - reference.value(solver.node(i), t)).abs());
                }
            }
            Ok(())
        })?;
        rows.push(ErrorRow {
            eps,
            h: ratio * eps,
            sup_error: worst,
            runtime_s: start.elapsed().as_secs_f64(),
        });
    }
    let verdict = rows
        .windows(2)
        .position(|w| !(w[1].sup_error < w[0].sup_error))
        .map_or(Verdict::MonotoneDecreasing, |i| Verdict::ViolatedAt(i + 1));
    Ok(ErrorTable { rows, verdict })
}

/// Payoff that equals φ for t ≤ ε²/2, ramps linearly in t to ψ on
/// (ε²/2, ε²] and equals ψ afterwards.
///
/// The ramp starts from φ(·, ε²/2) at t = ε²/2, so the payoff is continuous
/// in time.
pub fn ramp_data<P, Q>(psi: P, phi: Q, eps: f64) -> BoundaryData
where
    P: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    Q: Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
{
    let half = 0.5 * eps * eps;
    BoundaryData::new(move |x: &[f64], t: f64| {
        if t <= half {
            phi(x, t)
        } else if t <= 2.0 * half {
            let start = phi(x, half);
            start + (t / half - 1.0) * (psi(x) - start)
        } else {
            psi(x)
        }
    })
}

/// Relative slack for order checks between consecutive levels.
const ROUNDOFF: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticRow {
    pub level: usize,
    pub t: f64,
    pub sup_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticReport {
    pub rows: Vec<AsymptoticRow>,
    /// sup_x |u(x, t_k) − U(x)| never increased (beyond `slack`) for k > 2.
    pub nonincreasing_after_level_2: bool,
    pub lower_barrier_monotone: bool,
    pub upper_barrier_monotone: bool,
    pub elliptic_iterations: usize,
    pub elliptic_residual: f64,
}

type SpaceFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type SpaceTimeFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;

/// Inputs for [`asymptotic_study`].
#[derive(Clone)]
pub struct AsymptoticSetup {
    pub domain: Domain,
    pub params: GameParams,
    pub dirs: DirectionSet,
    pub h: f64,
    pub psi: SpaceFn,
    pub phi_init: SpaceTimeFn,
    pub elliptic_tol: f64,
    pub max_iter: usize,
}

/// Long-time behavior of the DPP with ramp data: sup difference to the
/// time-independent solution at the levels in `k_list`, plus monotonicity
/// of the constant-barrier runs. The horizon is set to the largest level.
pub fn asymptotic_study(setup: &AsymptoticSetup, k_list: &[usize]) -> Result<AsymptoticReport> {
    let k_max = *k_list
        .iter()
        .max()
        .ok_or_else(|| Error::InvalidParams("empty level list".into()))?;
    if k_max < 3 {
        return Err(Error::InvalidParams("need at least 3 levels".into()));
    }
    let params = setup.params.with_horizon(k_max as f64 * setup.params.time_step())?;
    let solver = DppSolver::with_spacing(&setup.domain, &params, &setup.dirs, setup.h)?;
    let psi = setup.psi.clone();
    let elliptic = solver.solve_elliptic(|x| psi(x), setup.elliptic_tol, setup.max_iter)?;
    let slack = 2.0 * setup.elliptic_tol;

    let (psi_a, phi_a) = (setup.psi.clone(), setup.phi_init.clone());
    let data = ramp_data(move |x| psi_a(x), move |x, t| phi_a(x, t), params.eps);
    let mut rows = Vec::new();
    let mut last = f64::INFINITY;
    let mut nonincreasing = true;
    solver.march(&data, |k, t, level| {
        let d = sup_diff(level, &elliptic.values);
        if k > 2 {
            if d > last + slack {
                nonincreasing = false;
            }
            last = d;
        } else if k == 2 {
            last = d;
        }
        if k_list.contains(&k) {
            rows.push(AsymptoticRow {
                level: k,
                t,
                sup_diff: d,
            });
        }
        Ok(())
    })?;

    let psi_nodes: Vec<f64> = (0..solver.lattice().len())
        .map(|i| (setup.psi)(solver.node(i)))
        .collect();
    let lo = psi_nodes.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = psi_nodes.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let monotone = |c: f64, sign: f64| -> Result<bool> {
        let psi_b = setup.psi.clone();
        let barrier = ramp_data(move |x| psi_b(x), move |_, _| c, params.eps);
        let mut prev: Option<Vec<f64>> = None;
        let mut ok = true;
        solver.march(&barrier, |_, _, level| {
            if let Some(p) = &prev {
                ok &= level
                    .iter()
                    .zip(p)
                    .all(|(a, b)| sign * (a - b) >= -ROUNDOFF * a.abs().max(1.0));
            }
            prev = Some(level.to_vec());
            Ok(())
        })?;
        Ok(ok)
    };
    Ok(AsymptoticReport {
        rows,
        nonincreasing_after_level_2: nonincreasing,
        lower_barrier_monotone: monotone(lo, 1.0)?,
        upper_barrier_monotone: monotone(hi, -1.0)?,
        elliptic_iterations: elliptic.iterations,
        elliptic_residual: elliptic.residual,
    })
}
