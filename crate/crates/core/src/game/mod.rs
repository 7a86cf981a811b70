//! Monte Carlo simulation of the time-dependent tug-of-war game with noise.
//!
//! Random draws per step come from one stream in a fixed order:
//! termination, coin toss for the winner, move-vs-noise branch, noise.

mod exit_time;
mod martingale;
mod strategy;

use std::f64::consts::PI;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dpp::BoundaryData;
use crate::error::{Error, Result};
use crate::geometry::{delta_from_dist, Domain, GameParams, SpaceTimePoint};
use crate::quadrature::{check_unit, orthogonal_frame};

pub use exit_time::{annulus_exit_time, AnnulusGame, ExitTimeEstimate};
pub use martingale::{martingale_diagnostic, minimal_drift_constant, MartingaleReport, StepDrift};
pub use strategy::{
    greedy_strategy, pull_strategy, FnStrategy, GreedyStrategy, HashedRandomStrategy, Player, PullStrategy, Strategy,
};

/// Master seed plus per-trajectory stream selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RngSpec {
    pub seed: u64,
}

impl RngSpec {
    pub fn new(seed: u64) -> Self {
        RngSpec { seed }
    }

    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GameState {
    pub c: u8,
    pub z: SpaceTimePoint,
}

/// States (c_j, Z_j) for j = 0..=τ+1; the last state repeats Z_τ with c = 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GameTrajectory {
    pub states: Vec<GameState>,
    pub tau: usize,
    pub payoff: f64,
}

/// Uniform sample from the (n−1)-disk of radius `radius` orthogonal to `nu`.
pub(crate) fn sample_orthogonal_disk<R: Rng>(rng: &mut R, n: usize, nu: &[f64], radius: f64, out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    let mut nu3 = [0.0; 3];
    nu3[..n].copy_from_slice(nu);
    let frame = orthogonal_frame(n, &nu3);
    match n {
        1 => {}
        2 => {
            let s = radius * (2.0 * rng.gen::<f64>() - 1.0);
            for i in 0..2 {
                out[i] = s * frame[0][i];
            }
        }
        _ => {
            let r = radius * rng.gen::<f64>().sqrt();
            let phi = 2.0 * PI * rng.gen::<f64>();
            let (a, b) = (r * phi.cos(), r * phi.sin());
            for i in 0..3 {
                out[i] = a * frame[0][i] + b * frame[1][i];
            }
        }
    }
}

/// Plays one game from `z0` until the termination coin fires.
pub fn play_game<R: Rng>(
    z0: &SpaceTimePoint,
    s_i: &dyn Strategy,
    s_ii: &dyn Strategy,
    params: &GameParams,
    domain: &Domain,
    f: &BoundaryData,
    rng: &mut R,
) -> Result<GameTrajectory> {
    let n = params.n;
    if z0.x.len() != n || domain.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: z0.x.len(),
        });
    }
    let step = params.time_step();
    let max_steps = (z0.t / step).ceil().max(0.0) as usize + 1;
    let mut states = vec![GameState { c: 0, z: z0.clone() }];
    let mut noise = vec![0.0; n];
    for j in 0..=max_steps {
        let z = &states[j].z;
        let delta = delta_from_dist(domain.signed_dist(&z.x)?, z.t, params.eps);
        let xi: f64 = rng.gen();
        if xi < delta {
            let payoff = f.eval(&z.x, z.t);
            let last = GameState { c: 1, z: z.clone() };
            states.push(last);
            return Ok(GameTrajectory { states, tau: j, payoff });
        }
        let player_i_wins = rng.gen::<f64>() < 0.5;
        let strategy = if player_i_wins { s_i } else { s_ii };
        let nu = strategy.choose(&states)?;
        check_unit(n, &nu)?;
        let z = &states[j].z;
        let mut x = z.x.clone();
        if rng.gen::<f64>() < params.alpha {
            for (xi, vi) in x.iter_mut().zip(&nu) {
                *xi += params.eps * vi;
            }
        } else {
            sample_orthogonal_disk(rng, n, &nu, params.eps, &mut noise);
            for (xi, hi) in x.iter_mut().zip(&noise) {
                *xi += hi;
            }
        }
        let t = z0.t - (j + 1) as f64 * step;
        states.push(GameState {
            c: 0,
            z: SpaceTimePoint { x, t },
        });
    }
    unreachable!("the termination weight is 1 once t ≤ 0")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValueEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// Sum with O(log n) error growth; the result depends only on the order of `xs`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Sample mean and standard error of the mean.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    let mean = pairwise_sum(xs) / m;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&dev) / (m - 1.0);
    (mean, (var / m).sqrt())
}

/// Plays `count` independent games; trajectory i uses stream i of `rng`.
#[allow(clippy::too_many_arguments)]
pub fn simulate<T, G>(
    z0: &SpaceTimePoint,
    s_i: &dyn Strategy,
    s_ii: &dyn Strategy,
    params: &GameParams,
    domain: &Domain,
    f: &BoundaryData,
    count: usize,
    rng: RngSpec,
    map: G,
) -> Result<Vec<T>>
where
    T: Send,
    G: Fn(GameTrajectory) -> T + Sync,
{
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut stream = rng.stream(i as u64);
            play_game(z0, s_i, s_ii, params, domain, f, &mut stream).map(&map)
        })
        .collect()
}

/// Monte Carlo estimate of 𝔼[F(Z_τ)] over `m` games.
#[allow(clippy::too_many_arguments)]
pub fn estimate_value(
    z0: &SpaceTimePoint,
    s_i: &dyn Strategy,
    s_ii: &dyn Strategy,
    params: &GameParams,
    domain: &Domain,
    f: &BoundaryData,
    m: usize,
    rng: RngSpec,
) -> Result<ValueEstimate> {
    if m < 2 {
        return Err(Error::InvalidParams("M ≥ 2 required".into()));
    }
    let payoffs = simulate(z0, s_i, s_ii, params, domain, f, m, rng, |tr| tr.payoff)?;
    let (mean, stderr) = mean_and_stderr(&payoffs);
    Ok(ValueEstimate {
        mean,
        stderr,
        samples: m,
    })
}

/// One CSV row per state: trajectory id, j, c_j, t_j, x_j.
pub fn write_trajectories_csv<W: Write>(mut w: W, trajectories: &[GameTrajectory]) -> Result<()> {
    crate::output::write_schema_line(&mut w, "trajectories")?;
    let n = trajectories.first().map_or(0, |tr| tr.states[0].z.x.len());
    let coords: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    writeln!(w, "trajectory,j,c,t,{}", coords.join(","))?;
    for (id, tr) in trajectories.iter().enumerate() {
        for (j, s) in tr.states.iter().enumerate() {
            write!(w, "{id},{j},{},{}", s.c, s.z.t)?;
            for c in &s.z.x {
                write!(w, ",{c}")?;
            }
            writeln!(w)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn disk_setup() -> (Domain, GameParams) {
        (
            Domain::ball([0.0, 0.0], 1.0),
            GameParams::from_p(2, 0.2, 3.0, 0.4).unwrap(),
        )
    }

    #[test]
    fn constant_payoff() {
        let (dom, p) = disk_setup();
        let f = BoundaryData::constant(0.7);
        let s = pull_strategy(vec![0.0, 0.0]);
        let est = estimate_value(
            &SpaceTimePoint::new([0.1, 0.2], 0.4),
            &s,
            &s,
            &p,
            &dom,
            &f,
            200,
            RngSpec::new(1),
        )
        .unwrap();
        assert_abs_diff_eq!(est.mean, 0.7, epsilon = 1e-14);
        assert_abs_diff_eq!(est.stderr, 0.0, epsilon = 1e-14);
        let err = estimate_value(
            &SpaceTimePoint::new([0.1, 0.2], 0.4),
            &s,
            &s,
            &p,
            &dom,
            &f,
            1,
            RngSpec::new(1),
        );
        assert!(matches!(err, Err(Error::InvalidParams(msg)) if msg.contains("M ≥ 2")));
    }

    #[test]
    fn trajectories_respect_invariants() {
        let (dom, p) = disk_setup();
        let f = BoundaryData::new(|x: &[f64], t: f64| x[0] + t);
        let s_i = HashedRandomStrategy::new(2, 5);
        let s_ii = pull_strategy(vec![0.9, 0.0]);
        let z0 = SpaceTimePoint::new([0.3, -0.4], 0.4);
        let bound = (2.0 * z0.t / (p.eps * p.eps)).ceil() as usize;
        let trs = simulate(&z0, &s_i, &s_ii, &p, &dom, &f, 300, RngSpec::new(9), |tr| tr).unwrap();
        for tr in &trs {
            assert!(tr.tau <= bound);
            assert_eq!(tr.states[0].c, 0);
            assert_eq!(tr.states.len(), tr.tau + 2);
            assert_eq!(tr.states[tr.tau + 1].c, 1);
            for (j, s) in tr.states.iter().enumerate().take(tr.tau + 1) {
                assert_eq!(s.c, 0);
                assert!(dom.signed_dist(&s.z.x).unwrap() >= -p.eps - 1e-12);
                assert_abs_diff_eq!(s.z.t, z0.t - j as f64 * p.time_step(), epsilon = 1e-12);
            }
            let last = &tr.states[tr.tau].z;
            assert_eq!(tr.payoff, f.eval(&last.x, last.t));
        }
    }

    #[test]
    fn reproducible_streams() {
        let (dom, p) = disk_setup();
        let f = BoundaryData::new(|x: &[f64], _| x[1]);
        let s = HashedRandomStrategy::new(2, 3);
        let z0 = SpaceTimePoint::new([0.0, 0.0], 0.4);
        let a = simulate(&z0, &s, &s, &p, &dom, &f, 50, RngSpec::new(4), |tr| tr).unwrap();
        let b = simulate(&z0, &s, &s, &p, &dom, &f, 50, RngSpec::new(4), |tr| tr).unwrap();
        assert_eq!(a, b);
        let c = simulate(&z0, &s, &s, &p, &dom, &f, 50, RngSpec::new(5), |tr| tr).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn early_time_forces_termination() {
        let (dom, p) = disk_setup();
        let f = BoundaryData::new(|x: &[f64], t: f64| x[0] - t);
        let s = pull_strategy(vec![0.0, 0.0]);
        let z0 = SpaceTimePoint::new([0.1, 0.1], p.time_step());
        let trs = simulate(&z0, &s, &s, &p, &dom, &f, 200, RngSpec::new(2), |tr| tr).unwrap();
        assert!(trs.iter().all(|tr| tr.tau <= 1));
        assert!(trs.iter().any(|tr| tr.tau == 1));
    }

    #[test]
    fn noise_is_orthogonal_and_uniform() {
        let mut rng = RngSpec::new(3).stream(0);
        let nu = [0.6, 0.0, 0.8];
        let mut h = [0.0; 3];
        let mut second = 0.0;
        let m = 20_000;
        for _ in 0..m {
            sample_orthogonal_disk(&mut rng, 3, &nu, 0.5, &mut h);
            let dot: f64 = h.iter().zip(&nu).map(|(a, b)| a * b).sum();
            assert!(dot.abs() < 1e-12);
            let r2: f64 = h.iter().map(|a| a * a).sum();
            assert!(r2 <= 0.25 + 1e-12);
            second += r2;
        }
        // E|h|² over a 2-disk of radius ε is ε²/2
        assert_abs_diff_eq!(second / m as f64, 0.125, epsilon = 0.005);
    }

    #[test]
    fn pairwise_sum_matches_plain_sum() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        assert_abs_diff_eq!(pairwise_sum(&xs), xs.iter().sum::<f64>(), epsilon = 1e-10);
    }
}
