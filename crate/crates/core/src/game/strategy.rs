use serde::{Deserialize, Serialize};

use super::GameState;
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::quadrature::{BallRule, DirectionSearch, DirectionSet, Extremum};

/// Deterministic map from the game history to a unit direction.
pub trait Strategy: Sync {
    fn choose(&self, history: &[GameState]) -> Result<Vec<f64>>;
}

impl<S: Strategy + ?Sized> Strategy for &S {
    fn choose(&self, history: &[GameState]) -> Result<Vec<f64>> {
        (**self).choose(history)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Player {
    #[serde(rename = "I")]
    I,
    #[serde(rename = "II")]
    II,
}

fn current(history: &[GameState]) -> &GameState {
    history.last().expect("history always holds the current state")
}

/// Feedback strategy from a closure of the current state (x, t).
pub struct FnStrategy<F>(pub F);

impl<F> Strategy for FnStrategy<F>
where
    F: Fn(&[f64], f64) -> Vec<f64> + Sync,
{
    fn choose(&self, history: &[GameState]) -> Result<Vec<f64>> {
        let z = &current(history).z;
        Ok((self.0)(&z.x, z.t))
    }
}

/// Maximizes (player I) or minimizes (player II) 𝒜_ε of the grid function
/// one level below the token time.
pub struct GreedyStrategy<'a> {
    u: &'a GridFunction,
    player: Player,
    dirs: DirectionSet,
    rule: BallRule,
}

impl GreedyStrategy<'_> {
    pub fn direction_at(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        let k = match self.u.level_index(t) {
            Ok(k) => k,
            Err(Error::BelowLevelZero { .. }) => return Err(Error::BelowLevelZero { t }),
            Err(e) => return Err(e),
        };
        if k == 0 {
            return Err(Error::BelowLevelZero {
                t: t - self.u.params().time_step(),
            });
        }
        let view = self.u.view(k - 1);
        let search = DirectionSearch::new(&view, x, self.u.params(), &self.rule, &self.dirs)?;
        let which = match self.player {
            Player::I => Extremum::Max,
            Player::II => Extremum::Min,
        };
        let (nu, _) = search.optimize(which)?;
        Ok(nu[..x.len()].to_vec())
    }
}

impl Strategy for GreedyStrategy<'_> {
    fn choose(&self, history: &[GameState]) -> Result<Vec<f64>> {
        let z = &current(history).z;
        self.direction_at(&z.x, z.t)
    }
}

pub fn greedy_strategy<'a>(u: &'a GridFunction, player: Player, dirs: &DirectionSet) -> Result<GreedyStrategy<'a>> {
    if dirs.dim() != u.params().n {
        return Err(Error::DimensionMismatch {
            expected: u.params().n,
            got: dirs.dim(),
        });
    }
    Ok(GreedyStrategy {
        u,
        player,
        dirs: dirs.clone(),
        rule: BallRule::for_dim(u.params().n)?,
    })
}

/// ν = −(x − z)/|x − z| (towards z), or the opposite when reversed; e₁ at x = z.
#[derive(Debug, Clone, PartialEq)]
pub struct PullStrategy {
    target: Vec<f64>,
    sign: f64,
}

impl PullStrategy {
    pub fn reversed(mut self) -> Self {
        self.sign = -self.sign;
        self
    }

    pub fn direction_at(&self, x: &[f64]) -> Vec<f64> {
        let d: Vec<f64> = x.iter().zip(&self.target).map(|(a, b)| a - b).collect();
        let r = d.iter().map(|a| a * a).sum::<f64>().sqrt();
        if r == 0.0 {
            let mut e = vec![0.0; x.len()];
            e[0] = 1.0;
            return e;
        }
        d.iter().map(|a| -self.sign * a / r).collect()
    }
}

impl Strategy for PullStrategy {
    fn choose(&self, history: &[GameState]) -> Result<Vec<f64>> {
        let z = &current(history).z;
        if z.x.len() != self.target.len() {
            return Err(Error::DimensionMismatch {
                expected: self.target.len(),
                got: z.x.len(),
            });
        }
        Ok(self.direction_at(&z.x))
    }
}

pub fn pull_strategy(z: Vec<f64>) -> PullStrategy {
    PullStrategy { target: z, sign: 1.0 }
}

/// Pseudo-random direction obtained by hashing the current state with a seed.
///
/// Deterministic in the history, so it fits the strategy contract while
/// behaving like an uninformed player.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashedRandomStrategy {
    n: usize,
    seed: u64,
}

impl HashedRandomStrategy {
    pub fn new(n: usize, seed: u64) -> Self {
        HashedRandomStrategy { n, seed }
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn unit_interval(h: u64) -> f64 {
    (h >> 11) as f64 / (1u64 << 53) as f64
}

impl Strategy for HashedRandomStrategy {
    fn choose(&self, history: &[GameState]) -> Result<Vec<f64>> {
        let z = &current(history).z;
        let mut h = splitmix(self.seed);
        for v in z.x.iter().chain(std::iter::once(&z.t)) {
            h = splitmix(h ^ v.to_bits());
        }
        let u1 = unit_interval(h);
        let u2 = unit_interval(splitmix(h));
        let two_pi = 2.0 * std::f64::consts::PI;
        Ok(match self.n {
            1 => vec![if u1 < 0.5 { 1.0 } else { -1.0 }],
            2 => {
                let th = two_pi * u1;
                vec![th.cos(), th.sin()]
            }
            _ => {
                let zc = 1.0 - 2.0 * u1;
                let r = (1.0 - zc * zc).max(0.0).sqrt();
                let phi = two_pi * u2;
                vec![r * phi.cos(), r * phi.sin(), zc]
            }
        })
    }
}
