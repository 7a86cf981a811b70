//! Direction sets on S^{n−1}, averaging rules on the (n−1)-disk orthogonal
//! to a direction, the one-step operator 𝒜_ε and the midrange over
//! directions.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::GameParams;

/// A function of space that can be sampled by the one-step operator.
pub trait SpatialFn: Sync {
    fn eval(&self, x: &[f64]) -> Result<f64>;
}

/// Adapter turning an infallible closure into a [`SpatialFn`].
pub struct FnSlice<F>(pub F);

impl<F> SpatialFn for FnSlice<F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn eval(&self, x: &[f64]) -> Result<f64> {
        Ok((self.0)(x))
    }
}

impl<S: SpatialFn + ?Sized> SpatialFn for &S {
    fn eval(&self, x: &[f64]) -> Result<f64> {
        (**self).eval(x)
    }
}

pub type Vec3 = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Refinement {
    None,
    LocalBracket { theta_tol: f64 },
}

pub const DEFAULT_THETA_TOL: f64 = 1e-4;

/// Finite set of unit directions used to approximate sup/inf over S^{n−1}.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionSet {
    n: usize,
    vectors: Vec<Vec3>,
    refinement: Refinement,
}

pub fn default_direction_count(n: usize) -> usize {
    match n {
        1 => 2,
        2 => 64,
        _ => 194,
    }
}

impl DirectionSet {
    /// `count` equispaced angles in 2-d, a Fibonacci covering in 3-d; in
    /// 1-d the set is always {+1, −1} and `count` is ignored.
    pub fn new(n: usize, count: usize, refinement: Refinement) -> Result<Self> {
        if let Refinement::LocalBracket { theta_tol } = refinement {
            if !(theta_tol > 0.0) {
                return Err(Error::InvalidParams(format!(
                    "theta_tol = {theta_tol} must be positive"
                )));
            }
        }
        let vectors = match n {
            1 => vec![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]],
            2 => {
                if count < 3 {
                    return Err(Error::InvalidParams("need at least 3 directions in 2-d".into()));
                }
                (0..count)
                    .map(|k| {
                        let th = 2.0 * PI * k as f64 / count as f64;
                        [th.cos(), th.sin(), 0.0]
                    })
                    .collect()
            }
            3 => {
                if count < 6 {
                    return Err(Error::InvalidParams("need at least 6 directions in 3-d".into()));
                }
                let golden = PI * (3.0 - 5f64.sqrt());
                (0..count)
                    .map(|i| {
                        let z = 1.0 - (2.0 * i as f64 + 1.0) / count as f64;
                        let r = (1.0 - z * z).sqrt();
                        let phi = golden * i as f64;
                        [r * phi.cos(), r * phi.sin(), z]
                    })
                    .collect()
            }
            _ => return Err(Error::InvalidParams(format!("dimension {n} not in 1..=3"))),
        };
        let refinement = if n == 1 { Refinement::None } else { refinement };
        Ok(DirectionSet { n, vectors, refinement })
    }

    pub fn default_for(n: usize) -> Result<Self> {
        Self::new(
            n,
            default_direction_count(n),
            Refinement::LocalBracket {
                theta_tol: DEFAULT_THETA_TOL,
            },
        )
    }

    pub fn coarse(n: usize, count: usize) -> Result<Self> {
        Self::new(n, count, Refinement::None)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[Vec3] {
        &self.vectors
    }

    pub fn refinement(&self) -> Refinement {
        self.refinement
    }

    pub fn theta_tol(&self) -> f64 {
        match self.refinement {
            Refinement::None => 0.0,
            Refinement::LocalBracket { theta_tol } => theta_tol,
        }
    }
}

/// Averaging rule on the unit (n−1)-disk; nodes are reference coordinates
/// in an orthonormal frame of ν^⊥ and get scaled by ε at evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct BallRule {
    n: usize,
    nodes: Vec<[f64; 2]>,
    weights: Vec<f64>,
}

const GAUSS5: [(f64, f64); 5] = [
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.0, 0.568_888_888_888_888_9),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

const GAUSS3: [(f64, f64); 3] = [
    (-0.774_596_669_241_483_4, 0.555_555_555_555_555_6),
    (0.0, 0.888_888_888_888_888_9),
    (0.774_596_669_241_483_4, 0.555_555_555_555_555_6),
];

const POLAR_ANGLES: usize = 6;

impl BallRule {
    /// Degree-4 exact rule: the point mass at 0 in 1-d, 5-node
    /// Gauss–Legendre on the segment in 2-d, a 3×6 polar product in 3-d.
    pub fn for_dim(n: usize) -> Result<Self> {
        let (nodes, mut weights): (Vec<[f64; 2]>, Vec<f64>) = match n {
            1 => (vec![[0.0, 0.0]], vec![1.0]),
            2 => GAUSS5.iter().map(|&(s, w)| ([s, 0.0], 0.5 * w)).unzip(),
            3 => {
                let mut nodes = Vec::new();
                let mut weights = Vec::new();
                for &(s, w) in &GAUSS3 {
                    let r = 0.5 * (1.0 + s);
                    let radial = 0.5 * w;
                    for k in 0..POLAR_ANGLES {
                        let phi = 2.0 * PI * k as f64 / POLAR_ANGLES as f64;
                        nodes.push([r * phi.cos(), r * phi.sin()]);
                        weights.push(2.0 * radial * r / POLAR_ANGLES as f64);
                    }
                }
                (nodes, weights)
            }
            _ => return Err(Error::InvalidParams(format!("dimension {n} not in 1..=3"))),
        };
        // make the floating-point sum of the weights exactly 1
        let head: f64 = weights[..weights.len() - 1].iter().sum();
        *weights.last_mut().unwrap() = 1.0 - head;
        Ok(BallRule { n, nodes, weights })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Orthonormal frame of ν^⊥ (only the first n−1 vectors are meaningful).
pub(crate) fn orthogonal_frame(n: usize, nu: &Vec3) -> [Vec3; 2] {
    match n {
        1 => [[0.0; 3]; 2],
        2 => [[-nu[1], nu[0], 0.0], [0.0; 3]],
        _ => {
            // branchless frame; continuous away from the plane nu_z = 0
            let sign = 1f64.copysign(nu[2]);
            let a = -1.0 / (sign + nu[2]);
            let b = nu[0] * nu[1] * a;
            [
                [1.0 + sign * nu[0] * nu[0] * a, sign * b, -sign * nu[0]],
                [b, sign + nu[1] * nu[1] * a, -nu[1]],
            ]
        }
    }
}

fn to_vec3(v: &[f64]) -> Vec3 {
    let mut out = [0.0; 3];
    out[..v.len()].copy_from_slice(v);
    out
}

pub(crate) fn check_unit(n: usize, nu: &[f64]) -> Result<Vec3> {
    if nu.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: nu.len(),
        });
    }
    let len = nu.iter().map(|a| a * a).sum::<f64>().sqrt();
    if (len - 1.0).abs() > 1e-9 {
        return Err(Error::NonUnitDirection { direction: nu.to_vec() });
    }
    Ok(to_vec3(nu))
}

fn ball_average_frame<S: SpatialFn + ?Sized>(
    slice: &S,
    x: &[f64],
    frame: &[Vec3; 2],
    eps: f64,
    rule: &BallRule,
) -> Result<f64> {
    let n = x.len();
    if n == 1 {
        return slice.eval(x);
    }
    let mut buf = [0.0; 3];
    let mut acc = 0.0;
    for (node, w) in rule.nodes.iter().zip(&rule.weights) {
        for i in 0..n {
            buf[i] = x[i] + eps * (node[0] * frame[0][i] + node[1] * frame[1][i]);
        }
        acc += w * slice.eval(&buf[..n])?;
    }
    Ok(acc)
}

fn a_eps_vec3<S: SpatialFn + ?Sized>(
    slice: &S,
    x: &[f64],
    nu: &Vec3,
    params: &GameParams,
    rule: &BallRule,
) -> Result<f64> {
    let n = x.len();
    let mut step = [0.0; 3];
    for i in 0..n {
        step[i] = x[i] + params.eps * nu[i];
    }
    let jump = slice.eval(&step[..n])?;
    let frame = orthogonal_frame(n, nu);
    let avg = ball_average_frame(slice, x, &frame, params.eps, rule)?;
    Ok(params.alpha * jump + params.beta * avg)
}

/// Average of `slice` over the (n−1)-disk of radius ε through `x`
/// orthogonal to `nu`.
pub fn ball_average<S: SpatialFn + ?Sized>(slice: &S, x: &[f64], nu: &[f64], eps: f64, rule: &BallRule) -> Result<f64> {
    let n = rule.dim();
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x.len(),
        });
    }
    let nu = check_unit(n, nu)?;
    let frame = orthogonal_frame(n, &nu);
    ball_average_frame(slice, x, &frame, eps, rule)
}

/// 𝒜_ε u(x; ν) = α u(x + εν) + β ⨍_{B_ε^ν} u(x + h) dh.
pub fn a_epsilon<S: SpatialFn + ?Sized>(
    slice: &S,
    x: &[f64],
    nu: &[f64],
    params: &GameParams,
    rule: &BallRule,
) -> Result<f64> {
    if x.len() != params.n {
        return Err(Error::DimensionMismatch {
            expected: params.n,
            got: x.len(),
        });
    }
    let nu = check_unit(params.n, nu)?;
    a_eps_vec3(slice, x, &nu, params, rule)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extremum {
    Max,
    Min,
}

impl Extremum {
    fn better(self, a: f64, b: f64) -> bool {
        match self {
            Extremum::Max => a > b,
            Extremum::Min => a < b,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Midrange {
    pub value: f64,
    pub max: f64,
    pub min: f64,
    pub nu_max: Vec<f64>,
    pub nu_min: Vec<f64>,
}

/// Evaluates 𝒜_ε over a direction set and refines the extremal directions.
pub struct DirectionSearch<'a, S: SpatialFn + ?Sized> {
    slice: &'a S,
    x: &'a [f64],
    params: &'a GameParams,
    rule: &'a BallRule,
    dirs: &'a DirectionSet,
}

impl<'a, S: SpatialFn + ?Sized> DirectionSearch<'a, S> {
    pub fn new(
        slice: &'a S,
        x: &'a [f64],
        params: &'a GameParams,
        rule: &'a BallRule,
        dirs: &'a DirectionSet,
    ) -> Result<Self> {
        let n = params.n;
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x.len(),
            });
        }
        if dirs.dim() != n || rule.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: dirs.dim(),
            });
        }
        Ok(DirectionSearch {
            slice,
            x,
            params,
            rule,
            dirs,
        })
    }

    fn eval(&self, nu: &Vec3) -> Result<f64> {
        a_eps_vec3(self.slice, self.x, nu, self.params, self.rule)
    }

    /// Coarse scan over the set: (argmax index, max, argmin index, min),
    /// ties resolved to the lowest index.
    pub fn scan(&self) -> Result<(usize, f64, usize, f64)> {
        let mut best = (0, f64::NEG_INFINITY, 0, f64::INFINITY);
        for (k, nu) in self.dirs.vectors().iter().enumerate() {
            let v = self.eval(nu)?;
            if v > best.1 {
                best.0 = k;
                best.1 = v;
            }
            if v < best.3 {
                best.2 = k;
                best.3 = v;
            }
        }
        Ok(best)
    }

    fn refine(&self, start: usize, start_value: f64, which: Extremum) -> Result<(Vec3, f64)> {
        let nu0 = self.dirs.vectors()[start];
        let tol = match self.dirs.refinement() {
            Refinement::None => return Ok((nu0, start_value)),
            Refinement::LocalBracket { theta_tol } => theta_tol,
        };
        let (cand, val) = match self.params.n {
            2 => self.golden_section(nu0, tol, which)?,
            3 => self.pattern_search(nu0, start_value, tol, which)?,
            _ => return Ok((nu0, start_value)),
        };
        if which.better(val, start_value) {
            Ok((cand, val))
        } else {
            Ok((nu0, start_value))
        }
    }

    fn golden_section(&self, nu0: Vec3, tol: f64, which: Extremum) -> Result<(Vec3, f64)> {
        let half = 2.0 * PI / self.dirs.len() as f64;
        let theta0 = nu0[1].atan2(nu0[0]);
        let sign = if which == Extremum::Max { 1.0 } else { -1.0 };
        let f = |th: f64| -> Result<f64> { Ok(sign * self.eval(&[th.cos(), th.sin(), 0.0])?) };
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let (mut a, mut b) = (theta0 - half, theta0 + half);
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        let mut fc = f(c)?;
        let mut fd = f(d)?;
        while b - a > tol {
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = f(c)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = f(d)?;
            }
        }
        let (th, v) = if fc > fd { (c, fc) } else { (d, fd) };
        Ok(([th.cos(), th.sin(), 0.0], sign * v))
    }

    fn pattern_search(&self, nu0: Vec3, v0: f64, tol: f64, which: Extremum) -> Result<(Vec3, f64)> {
        let mut nu = nu0;
        let mut val = v0;
        let mut step = (4.0 * PI / self.dirs.len() as f64).sqrt();
        let mut iters = 0;
        while step >= tol && iters < 500 {
            iters += 1;
            let frame = orthogonal_frame(3, &nu);
            let (s, c) = step.sin_cos();
            let mut moved = false;
            for e in [frame[0], frame[1]] {
                for sgn in [1.0, -1.0] {
                    let mut cand = [0.0; 3];
                    for i in 0..3 {
                        cand[i] = c * nu[i] + sgn * s * e[i];
                    }
                    let len = (cand[0] * cand[0] + cand[1] * cand[1] + cand[2] * cand[2]).sqrt();
                    cand.iter_mut().for_each(|a| *a /= len);
                    let v = self.eval(&cand)?;
                    if which.better(v, val) {
                        nu = cand;
                        val = v;
                        moved = true;
                    }
                }
            }
            if !moved {
                step *= 0.5;
            }
        }
        Ok((nu, val))
    }

    /// Extremal direction and value of 𝒜_ε after refinement.
    pub fn optimize(&self, which: Extremum) -> Result<(Vec3, f64)> {
        let (imax, vmax, imin, vmin) = self.scan()?;
        match which {
            Extremum::Max => self.refine(imax, vmax, which),
            Extremum::Min => self.refine(imin, vmin, which),
        }
    }

    pub fn midrange(&self) -> Result<Midrange> {
        let n = self.params.n;
        let (imax, vmax, imin, vmin) = self.scan()?;
        let (nu_max, max) = self.refine(imax, vmax, Extremum::Max)?;
        let (nu_min, min) = self.refine(imin, vmin, Extremum::Min)?;
        Ok(Midrange {
            value: 0.5 * (max + min),
            max,
            min,
            nu_max: nu_max[..n].to_vec(),
            nu_min: nu_min[..n].to_vec(),
        })
    }

    /// Midrange value only; skips building the direction vectors.
    pub(crate) fn midrange_value(&self) -> Result<f64> {
        let (imax, vmax, imin, vmin) = self.scan()?;
        let (_, max) = self.refine(imax, vmax, Extremum::Max)?;
        let (_, min) = self.refine(imin, vmin, Extremum::Min)?;
        Ok(0.5 * (max + min))
    }
}

/// ½(sup + inf) of 𝒜_ε u(x; ·) over the direction set.
pub fn midrange_over_directions<S: SpatialFn + ?Sized>(
    slice: &S,
    x: &[f64],
    params: &GameParams,
    rule: &BallRule,
    dirs: &DirectionSet,
) -> Result<Midrange> {
    DirectionSearch::new(slice, x, params, rule, dirs)?.midrange()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn params2(alpha: f64, eps: f64) -> GameParams {
        GameParams::from_alpha(2, eps, alpha, 1.0).unwrap()
    }

    #[test]
    fn weights_sum_to_one_and_are_positive() {
        for n in 1..=3 {
            let rule = BallRule::for_dim(n).unwrap();
            assert_eq!(rule.weights().iter().sum::<f64>(), 1.0);
            assert!(rule.weights().iter().all(|&w| w > 0.0));
        }
    }

    #[test]
    fn ball_rules_exact_to_degree_four() {
        // monomials on the unit (n−1)-disk against closed-form moments
        let rule2 = BallRule::for_dim(2).unwrap();
        for k in 0..=4 {
            let q: f64 = rule2
                .nodes()
                .iter()
                .zip(rule2.weights())
                .map(|(h, w)| w * h[0].powi(k))
                .sum();
            let exact = if k % 2 == 1 { 0.0 } else { 1.0 / (k as f64 + 1.0) };
            assert_abs_diff_eq!(q, exact, epsilon = 1e-15);
        }
        let rule3 = BallRule::for_dim(3).unwrap();
        // ⨍ x^a y^b over the unit disk
        let moment = |a: i32, b: i32| -> f64 {
            match (a, b) {
                (0, 0) => 1.0,
                (2, 0) | (0, 2) => 0.25,
                (4, 0) | (0, 4) => 0.125,
                (2, 2) => 1.0 / 24.0,
                _ => 0.0,
            }
        };
        for a in 0..=4 {
            for b in 0..=(4 - a) {
                let q: f64 = rule3
                    .nodes()
                    .iter()
                    .zip(rule3.weights())
                    .map(|(h, w)| w * h[0].powi(a) * h[1].powi(b))
                    .sum();
                assert_abs_diff_eq!(q, moment(a, b), epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn frames_are_orthonormal() {
        let dirs = DirectionSet::default_for(3).unwrap();
        for nu in dirs.vectors() {
            let [e1, e2] = orthogonal_frame(3, nu);
            let dot = |a: &Vec3, b: &Vec3| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
            assert_abs_diff_eq!(dot(&e1, &e1), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(dot(&e2, &e2), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(dot(&e1, &e2), 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(dot(&e1, nu), 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(dot(&e2, nu), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn direction_sets_are_unit() {
        for n in 1..=3 {
            let d = DirectionSet::default_for(n).unwrap();
            for v in d.vectors() {
                let len = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                assert!((len - 1.0).abs() <= 1e-12);
            }
        }
        assert_eq!(DirectionSet::default_for(1).unwrap().len(), 2);
        assert_eq!(DirectionSet::default_for(3).unwrap().len(), 194);
    }

    #[test]
    fn ball_average_examples() {
        let rule = BallRule::for_dim(2).unwrap();
        let c = FnSlice(|_: &[f64]| 2.5);
        assert_abs_diff_eq!(
            ball_average(&c, &[0.3, 0.1], &[1.0, 0.0], 0.3, &rule).unwrap(),
            2.5,
            epsilon = 1e-15
        );
        let sq = FnSlice(|y: &[f64]| y[0] * y[0]);
        assert_abs_diff_eq!(
            ball_average(&sq, &[0.0, 0.0], &[0.0, 1.0], 0.3, &rule).unwrap(),
            0.03,
            epsilon = 1e-15
        );
        let lin = FnSlice(|y: &[f64]| 0.7 * y[0] - 1.3 * y[1] + 0.2);
        let x = [0.4, -0.2];
        let nu = [0.6, 0.8];
        assert_abs_diff_eq!(
            ball_average(&lin, &x, &nu, 0.3, &rule).unwrap(),
            lin.0(&x),
            epsilon = 1e-14
        );
        assert!(matches!(
            ball_average(&lin, &x, &[1.0, 1.0], 0.3, &rule),
            Err(Error::NonUnitDirection { .. })
        ));
    }

    #[test]
    fn a_epsilon_examples() {
        let p = params2(0.25, 0.3);
        let rule = BallRule::for_dim(2).unwrap();
        let c = FnSlice(|_: &[f64]| -1.0);
        assert_abs_diff_eq!(
            a_epsilon(&c, &[0.0, 0.0], &[0.0, 1.0], &p, &rule).unwrap(),
            -1.0,
            epsilon = 1e-15
        );
        let lin = FnSlice(|y: &[f64]| y[0]);
        assert_abs_diff_eq!(
            a_epsilon(&lin, &[0.0, 0.0], &[1.0, 0.0], &p, &rule).unwrap(),
            0.25 * 0.3,
            epsilon = 1e-15
        );
        let r2 = FnSlice(|y: &[f64]| y[0] * y[0] + y[1] * y[1]);
        let nu = [0.28, 0.96];
        assert_abs_diff_eq!(
            a_epsilon(&r2, &[0.0, 0.0], &nu, &p, &rule).unwrap(),
            0.045,
            epsilon = 1e-15
        );
    }

    #[test]
    fn one_dimensional_operator() {
        let p = GameParams::from_p(1, 0.1, 2.0, 1.0).unwrap();
        let rule = BallRule::for_dim(1).unwrap();
        let u = FnSlice(|y: &[f64]| y[0].powi(3));
        let x = [0.4];
        let v = a_epsilon(&u, &x, &[-1.0], &p, &rule).unwrap();
        assert_abs_diff_eq!(v, p.alpha * 0.3f64.powi(3) + p.beta * 0.4f64.powi(3), epsilon = 1e-15);
    }

    #[test]
    fn midrange_examples() {
        let p = params2(0.25, 0.3);
        let rule = BallRule::for_dim(2).unwrap();
        let dirs = DirectionSet::default_for(2).unwrap();
        let c = FnSlice(|_: &[f64]| 4.0);
        let m = midrange_over_directions(&c, &[0.1, 0.1], &p, &rule, &dirs).unwrap();
        assert_abs_diff_eq!(m.value, 4.0, epsilon = 1e-14);
        assert_eq!(m.nu_max, vec![1.0, 0.0]);
        assert_eq!(m.nu_min, vec![1.0, 0.0]);

        let a = [0.3, -0.7];
        let lin = FnSlice(move |y: &[f64]| a[0] * y[0] + a[1] * y[1] + 1.0);
        let x = [0.2, 0.5];
        let m = midrange_over_directions(&lin, &x, &p, &rule, &dirs).unwrap();
        assert_abs_diff_eq!(m.value, lin.0(&x), epsilon = 1e-12);
        let na = (a[0] * a[0] + a[1] * a[1]).sqrt();
        let angle = |v: &[f64], w: [f64; 2]| (v[0] * w[0] + v[1] * w[1]).clamp(-1.0, 1.0).acos();
        assert!(angle(&m.nu_max, [a[0] / na, a[1] / na]) <= 1e-4);
        assert!(angle(&m.nu_min, [-a[0] / na, -a[1] / na]) <= 1e-4);

        let r2 = FnSlice(move |y: &[f64]| (y[0] - x[0]).powi(2) + (y[1] - x[1]).powi(2));
        let m = midrange_over_directions(&r2, &x, &p, &rule, &dirs).unwrap();
        assert_abs_diff_eq!(m.value, 0.25 * 0.09 + 0.75 * 0.03, epsilon = 1e-14);
    }

    #[test]
    fn three_dimensional_refinement_finds_gradient() {
        let p = GameParams::from_alpha(3, 0.2, 0.4, 1.0).unwrap();
        let rule = BallRule::for_dim(3).unwrap();
        let dirs = DirectionSet::default_for(3).unwrap();
        let a = [0.3, -0.5, 0.81];
        let lin = FnSlice(move |y: &[f64]| a[0] * y[0] + a[1] * y[1] + a[2] * y[2]);
        let x = [0.0, 0.1, 0.2];
        let search = DirectionSearch::new(&lin, &x, &p, &rule, &dirs).unwrap();
        let (nu, _) = search.optimize(Extremum::Max).unwrap();
        let na = (a.iter().map(|v| v * v).sum::<f64>()).sqrt();
        let cos = (nu[0] * a[0] + nu[1] * a[1] + nu[2] * a[2]) / na;
        assert!(cos.clamp(-1.0, 1.0).acos() <= 1e-3);
        let m = search.midrange().unwrap();
        assert_abs_diff_eq!(m.value, lin.0(&x), epsilon = 1e-9);
    }

    #[test]
    fn refinement_never_worsens_scan() {
        let p = params2(0.4, 0.2);
        let rule = BallRule::for_dim(2).unwrap();
        let coarse = DirectionSet::coarse(2, 16).unwrap();
        let fine = DirectionSet::new(2, 16, Refinement::LocalBracket { theta_tol: 1e-6 }).unwrap();
        for s in 0..20 {
            let w = s as f64 * 0.37;
            let u = FnSlice(move |y: &[f64]| (3.0 * y[0] + w).sin() * (2.0 * y[1] - w).cos() + y[0] * y[1]);
            let x = [0.1 * w.sin(), 0.2 * w.cos()];
            let c = midrange_over_directions(&u, &x, &p, &rule, &coarse).unwrap();
            let f = midrange_over_directions(&u, &x, &p, &rule, &fine).unwrap();
            assert!(f.max >= c.max && f.min <= c.min);
        }
    }

    #[test]
    fn continuity_in_direction() {
        // gap |𝒜(ν) − 𝒜(χ)| shrinks as χ → ν
        let p = params2(0.3, 0.2);
        let rule = BallRule::for_dim(2).unwrap();
        let u = FnSlice(|y: &[f64]| (2.0 * y[0]).sin() + y[1] * y[1] * y[0]);
        let x = [0.3, 0.2];
        let th = 0.7f64;
        let nu = [th.cos(), th.sin()];
        let base = a_epsilon(&u, &x, &nu, &p, &rule).unwrap();
        let mut last = f64::INFINITY;
        for k in 1..8 {
            let dth = 1e-2 / 2f64.powi(k);
            let chi = [(th + dth).cos(), (th + dth).sin()];
            let gap = (a_epsilon(&u, &x, &chi, &p, &rule).unwrap() - base).abs();
            // Lipschitz slice: modulus ω(r) ≤ Lip·r with Lip ≤ 3
            let dist = ((nu[0] - chi[0]).powi(2) + (nu[1] - chi[1]).powi(2)).sqrt();
            assert!(gap <= 3.0 * 2.0 * p.eps * dist + 1e-15);
            assert!(gap <= last);
            last = gap;
        }
    }

    proptest! {
        #[test]
        fn midrange_is_monotone(
            c0 in -1.0f64..1.0, c1 in -2.0f64..2.0, c2 in -2.0f64..2.0, bump in 0.0f64..1.0,
            x0 in -0.5f64..0.5, x1 in -0.5f64..0.5,
        ) {
            let p = params2(0.35, 0.2);
            let rule = BallRule::for_dim(2).unwrap();
            let dirs = DirectionSet::coarse(2, 32).unwrap();
            let u = FnSlice(move |y: &[f64]| c0 + (c1 * y[0]).sin() + c2 * y[1] * y[0]);
            let v = FnSlice(move |y: &[f64]| c0 + (c1 * y[0]).sin() + c2 * y[1] * y[0] + bump * (1.0 + y[0] * y[0]));
            let x = [x0, x1];
            let mu = midrange_over_directions(&u, &x, &p, &rule, &dirs).unwrap();
            let mv = midrange_over_directions(&v, &x, &p, &rule, &dirs).unwrap();
            prop_assert!(mu.value <= mv.value);
        }

        #[test]
        fn midrange_translation_equivariant(c in -3.0f64..3.0, w in 0.0f64..6.0) {
            let p = params2(0.35, 0.2);
            let rule = BallRule::for_dim(2).unwrap();
            let dirs = DirectionSet::default_for(2).unwrap();
            let u = FnSlice(move |y: &[f64]| (2.0 * y[0] + w).sin() + y[1]);
            let v = FnSlice(move |y: &[f64]| (2.0 * y[0] + w).sin() + y[1] + c);
            let x = [0.1, -0.1];
            let mu = midrange_over_directions(&u, &x, &p, &rule, &dirs).unwrap();
            let mv = midrange_over_directions(&v, &x, &p, &rule, &dirs).unwrap();
            prop_assert!((mv.value - mu.value - c).abs() <= 1e-12);
            let ang = |a: &[f64], b: &[f64]| (a[0] * b[0] + a[1] * b[1]).clamp(-1.0, 1.0).acos();
            prop_assert!(ang(&mu.nu_max, &mv.nu_max) <= 1e-3);
            prop_assert!(ang(&mu.nu_min, &mv.nu_min) <= 1e-3);
        }
    }
}
