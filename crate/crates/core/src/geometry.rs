//! Spatial domains, parabolic ε-strips and the regularizing weight δ(x, t).
//!
//! Every supported domain kind has a closed-form signed distance and a
//! closed-form exterior ball at each boundary point, so all geometric
//! quantities here are exact up to roundoff.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for deciding boundary membership.
pub const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimePoint {
    pub x: Vec<f64>,
    pub t: f64,
}

impl SpaceTimePoint {
    pub fn new(x: impl Into<Vec<f64>>, t: f64) -> Self {
        SpaceTimePoint { x: x.into(), t }
    }
}

/// Bounded spatial domain Ω ⊂ ℝⁿ, n ∈ {1, 2, 3}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Interval {
        lo: f64,
        hi: f64,
    },
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Annulus {
        center: Vec<f64>,
        inner_radius: f64,
        outer_radius: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionTag {
    InteriorCore,
    LateralStripI,
    OutsideStripO,
    ParabolicBoundary,
    Exterior,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn unit_from(x: &[f64], c: &[f64]) -> (Vec<f64>, f64) {
    let d: Vec<f64> = x.iter().zip(c).map(|(a, b)| a - b).collect();
    let r = norm(&d);
    if r == 0.0 {
        let mut e = vec![0.0; x.len()];
        e[0] = 1.0;
        (e, 0.0)
    } else {
        (d.iter().map(|a| a / r).collect(), r)
    }
}

impl Domain {
    pub fn interval(lo: f64, hi: f64) -> Self {
        Domain::Interval { lo, hi }
    }

    pub fn unit_box(n: usize) -> Self {
        Domain::Box {
            lo: vec![0.0; n],
            hi: vec![1.0; n],
        }
    }

    pub fn ball(center: impl Into<Vec<f64>>, radius: f64) -> Self {
        Domain::Ball {
            center: center.into(),
            radius,
        }
    }

    pub fn annulus(center: impl Into<Vec<f64>>, inner_radius: f64, outer_radius: f64) -> Self {
        Domain::Annulus {
            center: center.into(),
            inner_radius,
            outer_radius,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Interval { .. } => 1,
            Domain::Box { lo, .. } => lo.len(),
            Domain::Ball { center, .. } | Domain::Annulus { center, .. } => center.len(),
        }
    }

    /// Checks the construction invariants: supported dimension, nonempty
    /// interior and finite parameters.
    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        if !(1..=3).contains(&n) {
            return Err(Error::InvalidParams(format!("dimension {n} not in 1..=3")));
        }
        let ok = match self {
            Domain::Interval { lo, hi } => lo.is_finite() && hi.is_finite() && lo < hi,
            Domain::Box { lo, hi } => {
                lo.len() == hi.len() && lo.iter().zip(hi).all(|(a, b)| a.is_finite() && b.is_finite() && a < b)
            }
            Domain::Ball { center, radius } => {
                center.iter().all(|c| c.is_finite()) && radius.is_finite() && *radius > 0.0
            }
            Domain::Annulus {
                center,
                inner_radius,
                outer_radius,
            } => {
                center.iter().all(|c| c.is_finite())
                    && *inner_radius > 0.0
                    && outer_radius.is_finite()
                    && inner_radius < outer_radius
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!("degenerate domain {self:?}")))
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Signed distance to ∂Ω: positive inside, negative outside.
    pub fn signed_dist(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.signed_dist_unchecked(x))
    }

    pub(crate) fn signed_dist_unchecked(&self, x: &[f64]) -> f64 {
        match self {
            Domain::Interval { lo, hi } => (x[0] - lo).min(hi - x[0]),
            Domain::Box { lo, hi } => {
                let mut outside = 0.0;
                let mut inside = f64::INFINITY;
                for i in 0..lo.len() {
                    let excess = (lo[i] - x[i]).max(x[i] - hi[i]);
                    if excess > 0.0 {
                        outside += excess * excess;
                    }
                    inside = inside.min(-excess);
                }
                if outside > 0.0 {
                    -outside.sqrt()
                } else {
                    inside
                }
            }
            Domain::Ball { center, radius } => {
                let r: f64 = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum::<f64>().sqrt();
                radius - r
            }
            Domain::Annulus {
                center,
                inner_radius,
                outer_radius,
            } => {
                let r: f64 = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum::<f64>().sqrt();
                (r - inner_radius).min(outer_radius - r)
            }
        }
    }

    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        Ok(self.signed_dist(x)? > BOUNDARY_TOL)
    }

    /// Axis-aligned bounding box of Ω̄.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Domain::Interval { lo, hi } => (vec![*lo], vec![*hi]),
            Domain::Box { lo, hi } => (lo.clone(), hi.clone()),
            Domain::Ball { center, radius: r }
            | Domain::Annulus {
                center,
                outer_radius: r,
                ..
            } => (
                center.iter().map(|c| c - r).collect(),
                center.iter().map(|c| c + r).collect(),
            ),
        }
    }

    /// Center z_R and radius R with Ω ⊂ B_R(z_R).
    pub fn enclosing_ball(&self) -> (Vec<f64>, f64) {
        match self {
            Domain::Interval { lo, hi } => (vec![0.5 * (lo + hi)], 0.5 * (hi - lo)),
            Domain::Box { lo, hi } => {
                let c: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
                let half: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (b - a)).collect();
                (c, norm(&half))
            }
            Domain::Ball { center, radius } => (center.clone(), *radius),
            Domain::Annulus {
                center, outer_radius, ..
            } => (center.clone(), *outer_radius),
        }
    }

    /// Closest point of ∂Ω to `x`.
    pub fn nearest_boundary_point(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        Ok(match self {
            Domain::Interval { lo, hi } => {
                if (x[0] - lo).abs() <= (x[0] - hi).abs() {
                    vec![*lo]
                } else {
                    vec![*hi]
                }
            }
            Domain::Box { lo, hi } => {
                let outside = lo.iter().zip(hi).zip(x).any(|((a, b), v)| v < a || v > b);
                if outside {
                    x.iter()
                        .zip(lo.iter().zip(hi))
                        .map(|(v, (a, b))| v.clamp(*a, *b))
                        .collect()
                } else {
                    let mut best = (f64::INFINITY, 0, 0.0);
                    for i in 0..lo.len() {
                        if x[i] - lo[i] < best.0 {
                            best = (x[i] - lo[i], i, lo[i]);
                        }
                        if hi[i] - x[i] < best.0 {
                            best = (hi[i] - x[i], i, hi[i]);
                        }
                    }
                    let mut y = x.to_vec();
                    y[best.1] = best.2;
                    y
                }
            }
            Domain::Ball { center, radius } => {
                let (u, _) = unit_from(x, center);
                center.iter().zip(&u).map(|(c, e)| c + radius * e).collect()
            }
            Domain::Annulus {
                center,
                inner_radius,
                outer_radius,
            } => {
                let (u, r) = unit_from(x, center);
                let rad = if r < 0.5 * (inner_radius + outer_radius) {
                    inner_radius
                } else {
                    outer_radius
                };
                center.iter().zip(&u).map(|(c, e)| c + rad * e).collect()
            }
        })
    }

    /// Ball B_ρ(z) ⊂ ℝⁿ \ Ω touching ∂Ω at `y`, with ρ ≤ `radius_hint` and
    /// ρ as large as the domain kind allows.
    pub fn exterior_sphere(&self, y: &[f64], radius_hint: f64) -> Result<(Vec<f64>, f64)> {
        let d = self.signed_dist(y)?;
        if d.abs() > BOUNDARY_TOL {
            return Err(Error::NotOnBoundary {
                point: y.to_vec(),
                distance: d,
            });
        }
        if !(radius_hint > 0.0) {
            return Err(Error::InvalidParams(format!(
                "radius hint {radius_hint} must be positive"
            )));
        }
        let place = |normal: &[f64], rho: f64| -> (Vec<f64>, f64) {
            (y.iter().zip(normal).map(|(a, nu)| a + rho * nu).collect(), rho)
        };
        Ok(match self {
            Domain::Interval { lo, hi } => {
                let nu = if (y[0] - lo).abs() <= (y[0] - hi).abs() {
                    -1.0
                } else {
                    1.0
                };
                place(&[nu], radius_hint)
            }
            Domain::Box { lo, hi } => {
                let mut normal = vec![0.0; lo.len()];
                for i in 0..lo.len() {
                    if (y[i] - lo[i]).abs() <= BOUNDARY_TOL {
                        normal[i] = -1.0;
                    } else if (y[i] - hi[i]).abs() <= BOUNDARY_TOL {
                        normal[i] = 1.0;
                    }
                }
                let len = norm(&normal);
                normal.iter_mut().for_each(|a| *a /= len);
                place(&normal, radius_hint)
            }
            Domain::Ball { center, .. } => {
                let (u, _) = unit_from(y, center);
                place(&u, radius_hint)
            }
            Domain::Annulus {
                center,
                inner_radius,
                outer_radius,
            } => {
                let (u, r) = unit_from(y, center);
                if (r - outer_radius).abs() <= (r - inner_radius).abs() {
                    place(&u, radius_hint)
                } else {
                    let inward: Vec<f64> = u.iter().map(|a| -a).collect();
                    place(&inward, radius_hint.min(*inner_radius))
                }
            }
        })
    }
}

/// Game parameters: dimension, step size, move/noise probabilities and horizon.
///
/// `alpha` and `p` are tied by α = (p−1)/(p+n), β = (n+1)/(p+n).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameParams {
    pub n: usize,
    pub eps: f64,
    pub alpha: f64,
    pub beta: f64,
    pub p: f64,
    pub horizon: f64,
}

impl GameParams {
    pub fn from_p(n: usize, eps: f64, p: f64, horizon: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::InvalidParams(format!("p = {p} must satisfy 1 < p < ∞")));
        }
        let nf = n as f64;
        let alpha = (p - 1.0) / (p + nf);
        let params = GameParams {
            n,
            eps,
            alpha,
            beta: 1.0 - alpha,
            p,
            horizon,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn from_alpha(n: usize, eps: f64, alpha: f64, horizon: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParams(format!("alpha = {alpha} must lie in (0, 1)")));
        }
        let nf = n as f64;
        let p = (1.0 + nf * alpha) / (1.0 - alpha);
        let params = GameParams {
            n,
            eps,
            alpha,
            beta: 1.0 - alpha,
            p,
            horizon,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.n) {
            return Err(Error::InvalidParams(format!("n = {} not in 1..=3", self.n)));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidParams(format!("eps = {} must be positive", self.eps)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0 && self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::InvalidParams("alpha and beta must lie in (0, 1)".into()));
        }
        if (self.alpha + self.beta - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParams("alpha + beta must equal 1".into()));
        }
        let nf = self.n as f64;
        if (self.alpha - (self.p - 1.0) / (self.p + nf)).abs() > 1e-12 {
            return Err(Error::InvalidParams("alpha and p are inconsistent".into()));
        }
        if !(self.horizon.is_finite() && self.horizon > self.time_step()) {
            return Err(Error::InvalidParams(format!(
                "horizon T = {} must exceed eps^2/2 = {}",
                self.horizon,
                self.time_step()
            )));
        }
        Ok(())
    }

    /// One game step in time, ε²/2.
    pub fn time_step(&self) -> f64 {
        0.5 * self.eps * self.eps
    }

    pub fn with_horizon(mut self, horizon: f64) -> Result<Self> {
        self.horizon = horizon;
        self.validate()?;
        Ok(self)
    }

    pub fn with_eps(mut self, eps: f64) -> Result<Self> {
        self.eps = eps;
        self.validate()?;
        Ok(self)
    }
}

/// δ as a function of the signed distance `d` and time `t`.
///
/// Points with d ≤ 0 (on or outside ∂Ω) or t ≤ 0 get weight 1.
pub(crate) fn delta_from_dist(d: f64, t: f64, eps: f64) -> f64 {
    if d <= BOUNDARY_TOL || t <= 0.0 {
        return 1.0;
    }
    let space = (d / eps).min(1.0);
    let time = ((2.0 * t).sqrt() / eps).min(1.0);
    1.0 - space * time
}

/// Time-independent limit of δ: 1 − min{1, dist/ε} inside, 1 outside.
pub(crate) fn delta_bar_from_dist(d: f64, eps: f64) -> f64 {
    if d <= BOUNDARY_TOL {
        1.0
    } else {
        1.0 - (d / eps).min(1.0)
    }
}

pub fn dist_to_boundary(domain: &Domain, x: &[f64]) -> Result<f64> {
    domain.signed_dist(x)
}

pub fn classify_region(domain: &Domain, params: &GameParams, point: &SpaceTimePoint) -> Result<RegionTag> {
    let d = domain.signed_dist(&point.x)?;
    let t = point.t;
    let eps = params.eps;
    if t > params.horizon + BOUNDARY_TOL || t <= -params.time_step() + BOUNDARY_TOL {
        return Ok(RegionTag::Exterior);
    }
    if d < -BOUNDARY_TOL {
        return Ok(if -d < eps {
            RegionTag::OutsideStripO
        } else {
            RegionTag::Exterior
        });
    }
    if t <= 0.0 {
        return Ok(RegionTag::OutsideStripO);
    }
    if d <= BOUNDARY_TOL {
        return Ok(RegionTag::ParabolicBoundary);
    }
    if t < params.time_step() || d < eps {
        Ok(RegionTag::LateralStripI)
    } else {
        Ok(RegionTag::InteriorCore)
    }
}

/// δ(x, t) = 1 − min{1, dist/ε}·min{1, √(2t)/ε} on the inner strip, 0 in
/// the interior core and 1 on the outer strip and parabolic boundary.
pub fn delta_weight(domain: &Domain, params: &GameParams, point: &SpaceTimePoint) -> Result<f64> {
    match classify_region(domain, params, point)? {
        RegionTag::Exterior => Err(Error::Exterior {
            point: point.x.clone(),
            t: point.t,
        }),
        RegionTag::InteriorCore => Ok(0.0),
        RegionTag::OutsideStripO | RegionTag::ParabolicBoundary => Ok(1.0),
        RegionTag::LateralStripI => {
            let d = domain.signed_dist_unchecked(&point.x);
            Ok(delta_from_dist(d, point.t, params.eps))
        }
    }
}

pub fn exterior_sphere(domain: &Domain, y: &[f64], radius_hint: f64) -> Result<(Vec<f64>, f64)> {
    domain.exterior_sphere(y, radius_hint)
}
