use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{mean_and_stderr, sample_orthogonal_disk, RngSpec};
use crate::error::{Error, Result};

/// Time-independent game in the annulus B_R(z) \ B̄_δ(z): player I pulls
/// towards z, player II pushes away but never past ∂B_R(z).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnulusGame {
    pub center: Vec<f64>,
    pub delta_ext: f64,
    pub outer_radius: f64,
    pub eps: f64,
    pub alpha: f64,
    pub max_steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExitTimeEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl AnnulusGame {
    pub fn new(center: Vec<f64>, delta_ext: f64, outer_radius: f64, eps: f64, alpha: f64) -> Result<Self> {
        if !(1..=3).contains(&center.len()) {
            return Err(Error::InvalidParams(format!("dimension {} not in 1..=3", center.len())));
        }
        if !(delta_ext > 0.0 && outer_radius > delta_ext) {
            return Err(Error::InvalidParams("need 0 < delta_ext < R".into()));
        }
        if !(eps > 0.0) || !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParams("need eps > 0 and alpha in (0, 1)".into()));
        }
        Ok(AnnulusGame {
            center,
            delta_ext,
            outer_radius,
            eps,
            alpha,
            max_steps: 100_000_000,
        })
    }

    fn radius(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.center)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Number of steps until the token enters the closed inner ball.
    pub fn play<R: Rng>(&self, x0: &[f64], rng: &mut R) -> Result<usize> {
        self.play_visiting(x0, rng, |_| {})
    }

    /// As [`AnnulusGame::play`], calling `visit` on every position.
    pub fn play_visiting<R: Rng, V: FnMut(&[f64])>(&self, x0: &[f64], rng: &mut R, mut visit: V) -> Result<usize> {
        let n = self.center.len();
        let mut x = x0.to_vec();
        let mut nu = vec![0.0; n];
        let mut h = vec![0.0; n];
        for k in 0..self.max_steps {
            visit(&x);
            let r = self.radius(&x);
            if r <= self.delta_ext {
                return Ok(k);
            }
            for i in 0..n {
                nu[i] = (x[i] - self.center[i]) / r;
            }
            let player_i_wins = rng.gen::<f64>() < 0.5;
            if rng.gen::<f64>() < self.alpha {
                let step = if player_i_wins {
                    -self.eps
                } else {
                    self.eps.min(self.outer_radius - r)
                };
                for i in 0..n {
                    x[i] += step * nu[i];
                }
            } else {
                // the orthogonal disk meets B_R(z) in a disk of radius √(R² − r²)
                let room = (self.outer_radius * self.outer_radius - r * r).max(0.0).sqrt();
                sample_orthogonal_disk(rng, n, &nu, self.eps.min(room), &mut h);
                for i in 0..n {
                    x[i] += h[i];
                }
            }
        }
        Err(Error::MaxIterations {
            max_iter: self.max_steps,
            residual: self.radius(&x) - self.delta_ext,
        })
    }

    pub fn estimate(&self, x0: &[f64], m: usize, rng: RngSpec) -> Result<ExitTimeEstimate> {
        if x0.len() != self.center.len() {
            return Err(Error::DimensionMismatch {
                expected: self.center.len(),
                got: x0.len(),
            });
        }
        let r0 = self.radius(x0);
        if !(r0 < self.outer_radius + 1e-12) || r0 < self.delta_ext - 1e-12 {
            return Err(Error::InvalidParams(format!("start radius {r0} outside the annulus")));
        }
        if m < 2 {
            return Err(Error::InvalidParams("M ≥ 2 required".into()));
        }
        let taus: Vec<f64> = (0..m)
            .into_par_iter()
            .map(|i| self.play(x0, &mut rng.stream(i as u64)).map(|k| k as f64))
            .collect::<Result<_>>()?;
        let (mean, stderr) = mean_and_stderr(&taus);
        Ok(ExitTimeEstimate {
            mean,
            stderr,
            samples: m,
        })
    }
}

#[allow(clippy::too_many_arguments)]
pub fn annulus_exit_time(
    x0: &[f64],
    z: &[f64],
    delta_ext: f64,
    outer_radius: f64,
    eps: f64,
    alpha: f64,
    m: usize,
    rng: RngSpec,
) -> Result<ExitTimeEstimate> {
    AnnulusGame::new(z.to_vec(), delta_ext, outer_radius, eps, alpha)?.estimate(x0, m, rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn start_on_inner_sphere_exits_immediately() {
        let est = annulus_exit_time(&[0.25, 0.0], &[0.0, 0.0], 0.25, 1.0, 0.1, 0.5, 100, RngSpec::new(1)).unwrap();
        assert_eq!(est.mean, 0.0);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn token_stays_in_outer_ball() {
        let g = AnnulusGame::new(vec![0.0, 0.0], 0.25, 1.0, 0.1, 0.25).unwrap();
        let mut rng = RngSpec::new(5).stream(0);
        let mut worst = 0.0f64;
        for _ in 0..50 {
            g.play_visiting(&[0.95, 0.0], &mut rng, |x| worst = worst.max(x[0].hypot(x[1])))
                .unwrap();
        }
        assert!(worst <= 1.0 + 1e-12);
        assert!(worst > 0.99);
        assert!(g.estimate(&[1.5, 0.0], 10, RngSpec::new(1)).is_err());
    }

    #[test]
    fn exit_time_grows_with_distance() {
        let g = AnnulusGame::new(vec![0.0, 0.0], 0.25, 1.0, 0.1, 0.5).unwrap();
        let near = g.estimate(&[0.4, 0.0], 2000, RngSpec::new(2)).unwrap();
        let far = g.estimate(&[0.8, 0.0], 2000, RngSpec::new(2)).unwrap();
        assert!(far.mean > near.mean + 3.0 * (far.stderr + near.stderr));
    }
}
