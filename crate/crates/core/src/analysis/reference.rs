use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use crate::dpp::BoundaryData;
use crate::error::{Error, Result};
use crate::geometry::GameParams;
use crate::quadrature::{ball_average, BallRule, FnSlice};

/// A space-time function with exact first and second derivatives.
pub trait SmoothFunction: Send + Sync {
    fn value(&self, x: &[f64], t: f64) -> f64;
    fn gradient(&self, x: &[f64], t: f64) -> Vec<f64>;
    /// Row-major n×n spatial Hessian.
    fn hessian(&self, x: &[f64], t: f64) -> Vec<f64>;
    fn time_derivative(&self, x: &[f64], t: f64) -> f64;
}

type ValueFn = dyn Fn(&[f64], f64) -> f64 + Send + Sync;
type VecFn = dyn Fn(&[f64], f64) -> Vec<f64> + Send + Sync;

/// [`SmoothFunction`] assembled from closures.
#[derive(Clone)]
pub struct CustomSmooth {
    pub value: Arc<ValueFn>,
    pub gradient: Arc<VecFn>,
    pub hessian: Arc<VecFn>,
    pub time_derivative: Arc<ValueFn>,
}

impl SmoothFunction for CustomSmooth {
    fn value(&self, x: &[f64], t: f64) -> f64 {
        (self.value)(x, t)
    }
    fn gradient(&self, x: &[f64], t: f64) -> Vec<f64> {
        (self.gradient)(x, t)
    }
    fn hessian(&self, x: &[f64], t: f64) -> Vec<f64> {
        (self.hessian)(x, t)
    }
    fn time_derivative(&self, x: &[f64], t: f64) -> f64 {
        (self.time_derivative)(x, t)
    }
}

/// Closed-form solutions used as oracles.
#[derive(Clone)]
pub enum ReferenceSolution {
    Constant(f64),
    /// e^{−π²t/3} sin(πx) on (0, 1): solves 3u_t = u_xx.
    HeatEigen,
    RadialW(RadialW),
    Custom(CustomSmooth),
}

impl std::fmt::Debug for ReferenceSolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ReferenceSolution::{}", self.name())
    }
}

impl ReferenceSolution {
    pub fn name(&self) -> &'static str {
        match self {
            ReferenceSolution::Constant(_) => "constant",
            ReferenceSolution::HeatEigen => "heat_eigen",
            ReferenceSolution::RadialW(_) => "radial_w",
            ReferenceSolution::Custom(_) => "custom_smooth",
        }
    }

    pub fn value(&self, x: &[f64], t: f64) -> f64 {
        match self {
            ReferenceSolution::Constant(c) => *c,
            ReferenceSolution::HeatEigen => (-PI * PI * t / 3.0).exp() * (PI * x[0]).sin(),
            ReferenceSolution::RadialW(w) => {
                let r = x
                    .iter()
                    .zip(&w.center)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                w.eval_unchecked(r)
            }
            ReferenceSolution::Custom(c) => c.value(x, t),
        }
    }

    /// Lipschitz constant in |x − y| + |t − s|^½ over t ∈ [0, horizon], when known.
    pub fn lipschitz(&self, horizon: f64) -> Option<f64> {
        match self {
            ReferenceSolution::Constant(_) => Some(0.0),
            ReferenceSolution::HeatEigen => Some(PI.max(PI * PI / 3.0 * horizon.max(0.0).sqrt())),
            _ => None,
        }
    }

    /// The solution itself used as payoff on the parabolic strip.
    pub fn boundary_data(&self, horizon: f64) -> BoundaryData {
        let me = self.clone();
        let data = BoundaryData::new(move |x: &[f64], t: f64| me.value(x, t));
        match self.lipschitz(horizon) {
            Some(l) => data.with_lipschitz(l),
            None => data,
        }
    }
}

pub fn heat_reference(n: usize, p: f64) -> Result<ReferenceSolution> {
    if n != 1 || (p - 2.0).abs() > 1e-12 {
        return Err(Error::InvalidParams(format!(
            "heat reference needs n = 1, p = 2 (got n = {n}, p = {p})"
        )));
    }
    Ok(ReferenceSolution::HeatEigen)
}

/// Radial barrier w(r) solving (α/2)w″ + ((1−α)(n−1)/(2(n+1)r))w′ = −1 with
/// w(δ) = 0 and w′(R + ε) = 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialW {
    pub center: Vec<f64>,
    pub n: usize,
    pub alpha: f64,
    pub delta_ext: f64,
    pub outer_radius: f64,
    pub eps: f64,
    pub log_branch: bool,
    quad: f64,
    c1: f64,
    gamma: f64,
    c2: f64,
}

impl RadialW {
    pub fn new(n: usize, alpha: f64, delta_ext: f64, outer_radius: f64, eps: f64) -> Result<Self> {
        if !(1..=3).contains(&n) || !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParams("need n in 1..=3 and alpha in (0, 1)".into()));
        }
        if !(delta_ext > eps && outer_radius > delta_ext && eps > 0.0) {
            return Err(Error::InvalidParams("need 0 < eps < delta_ext < R".into()));
        }
        let nf = n as f64;
        let rho = outer_radius + eps;
        let log_branch = (alpha - (nf - 1.0) / (2.0 * nf)).abs() <= 1e-10;
        let quad = (nf + 1.0) / (2.0 * alpha + nf - 1.0);
        let (c1, gamma) = if log_branch {
            (2.0 * nf / (nf - 1.0) * rho * rho, 0.0)
        } else {
            let g = (2.0 * alpha * nf - nf + 1.0) / ((nf + 1.0) * alpha);
            let c1 = 2.0 * (nf + 1.0).powi(2) * alpha / ((2.0 * alpha + nf - 1.0) * (2.0 * alpha * nf - nf + 1.0))
                * rho.powf((nf + 2.0 * alpha - 1.0) / ((nf + 1.0) * alpha));
            (c1, g)
        };
        let mut w = RadialW {
            center: vec![0.0; n],
            n,
            alpha,
            delta_ext,
            outer_radius,
            eps,
            log_branch,
            quad,
            c1,
            gamma,
            c2: 0.0,
        };
        w.c2 = -w.eval_unchecked(delta_ext);
        Ok(w)
    }

    pub fn centered_at(mut self, center: Vec<f64>) -> Self {
        self.center = center;
        self
    }

    fn eval_unchecked(&self, r: f64) -> f64 {
        let h = if self.log_branch { r.ln() } else { r.powf(self.gamma) };
        -self.quad * r * r + self.c1 * h + self.c2
    }

    pub fn value(&self, r: f64) -> Result<f64> {
        if !(r > self.delta_ext - self.eps && r <= self.outer_radius + self.eps) {
            return Err(Error::InvalidParams(format!(
                "radius {r} outside ({}, {}]",
                self.delta_ext - self.eps,
                self.outer_radius + self.eps
            )));
        }
        Ok(self.eval_unchecked(r))
    }

    pub fn derivative(&self, r: f64) -> f64 {
        let h = if self.log_branch {
            1.0 / r
        } else {
            self.gamma * r.powf(self.gamma - 1.0)
        };
        -2.0 * self.quad * r + self.c1 * h
    }

    pub fn second_derivative(&self, r: f64) -> f64 {
        let h = if self.log_branch {
            -1.0 / (r * r)
        } else {
            self.gamma * (self.gamma - 1.0) * r.powf(self.gamma - 2.0)
        };
        -2.0 * self.quad + self.c1 * h
    }

    /// (α/2)w″ + ((1−α)(n−1)/(2(n+1)r))w′ + 1 with derivatives from
    /// fourth-order central differences of the closed form.
    pub fn ode_residual_fd(&self, r: f64) -> f64 {
        let nf = self.n as f64;
        let h = 3e-3 * r;
        let f = |s: f64| self.eval_unchecked(s);
        let (p1, p2, m1, m2, c) = (f(r + h), f(r + 2.0 * h), f(r - h), f(r - 2.0 * h), f(r));
        let d1 = (-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * h);
        let d2 = (-p2 + 16.0 * p1 - 30.0 * c + 16.0 * m1 - m2) / (12.0 * h * h);
        0.5 * self.alpha * d2 + (1.0 - self.alpha) * (nf - 1.0) / (2.0 * (nf + 1.0) * r) * d1 + 1.0
    }
}

pub fn radial_w(r: f64, n: usize, alpha: f64, delta_ext: f64, outer_radius: f64, eps: f64) -> Result<f64> {
    RadialW::new(n, alpha, delta_ext, outer_radius, eps)?.value(r)
}

/// Residuals of the two second-order expansions behind the DPP consistency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TaylorResidual {
    /// ½[φ(x+εν, t−ε²/2) + φ(x−εν, t−ε²/2)] against φ − (ε²/2)φ_t + (ε²/2)⟨D²φ ν, ν⟩.
    pub half_sum: f64,
    /// ⨍_{B_ε^ν} φ(x+h, t−ε²/2) against φ − (ε²/2)φ_t + ε²/(2(n+1)) Δ_{ν⊥}φ.
    pub ball: f64,
}

impl TaylorResidual {
    pub fn max(&self) -> f64 {
        self.half_sum.max(self.ball)
    }
}

pub fn taylor_residual(
    phi: &dyn SmoothFunction,
    x: &[f64],
    t: f64,
    nu: &[f64],
    params: &GameParams,
    rule: &BallRule,
) -> Result<TaylorResidual> {
    let n = params.n;
    if x.len() != n || nu.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x.len(),
        });
    }
    let eps = params.eps;
    let s = t - params.time_step();
    let e2 = eps * eps;
    let v = phi.value(x, t);
    let vt = phi.time_derivative(x, t);
    let hess = phi.hessian(x, t);
    let trace: f64 = (0..n).map(|i| hess[i * n + i]).sum();
    let mut dnn = 0.0;
    for i in 0..n {
        for j in 0..n {
            dnn += nu[i] * hess[i * n + j] * nu[j];
        }
    }
    let plus: Vec<f64> = x.iter().zip(nu).map(|(a, b)| a + eps * b).collect();
    let minus: Vec<f64> = x.iter().zip(nu).map(|(a, b)| a - eps * b).collect();
    let half = 0.5 * (phi.value(&plus, s) + phi.value(&minus, s));
    let predicted_half = v - 0.5 * e2 * vt + 0.5 * e2 * dnn;
    let slice = FnSlice(|y: &[f64]| phi.value(y, s));
    let avg = ball_average(&slice, x, nu, eps, rule)?;
    let predicted_ball = v - 0.5 * e2 * vt + e2 / (2.0 * (n as f64 + 1.0)) * (trace - dnn);
    Ok(TaylorResidual {
        half_sum: (half - predicted_half).abs(),
        ball: (avg - predicted_ball).abs(),
    })
}
