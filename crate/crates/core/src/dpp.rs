//! The operator T, explicit marching for the parabolic DPP, Picard
//! iteration for the time-independent DPP, residuals and comparison.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{delta_bar_from_dist, delta_from_dist, Domain, GameParams};
use crate::grid::{GridFunction, Lattice, LevelView, TimeLevels};
use crate::quadrature::{BallRule, DirectionSearch, DirectionSet, SpatialFn};

/// Default lattice spacing as a fraction of ε.
pub const DEFAULT_H_RATIO: f64 = 0.125;
pub const DEFAULT_ELLIPTIC_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 1_000_000;

type SpaceTimeFn = dyn Fn(&[f64], f64) -> f64 + Send + Sync;

/// Payoff F on the parabolic strip, with an optional Lipschitz constant
/// with respect to the parabolic distance |x − y| + |t − s|^½.
#[derive(Clone)]
pub struct BoundaryData {
    f: Arc<SpaceTimeFn>,
    lipschitz: Option<f64>,
}

impl fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundaryData")
            .field("lipschitz", &self.lipschitz)
            .finish_non_exhaustive()
    }
}

impl BoundaryData {
    pub fn new<F>(f: F) -> Self
    where
        F: Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
    {
        BoundaryData {
            f: Arc::new(f),
            lipschitz: None,
        }
    }

    pub fn constant(c: f64) -> Self {
        BoundaryData {
            f: Arc::new(move |_, _| c),
            lipschitz: Some(0.0),
        }
    }

    pub fn with_lipschitz(mut self, lipschitz: f64) -> Self {
        self.lipschitz = Some(lipschitz);
        self
    }

    pub fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }

    pub fn eval(&self, x: &[f64], t: f64) -> f64 {
        (self.f)(x, t)
    }
}

/// Solver for the DPP on a fixed lattice.
#[derive(Debug, Clone)]
pub struct DppSolver {
    domain: Domain,
    params: GameParams,
    dirs: DirectionSet,
    rule: BallRule,
    lattice: Lattice,
    times: TimeLevels,
    coords: Vec<f64>,
    dist: Vec<f64>,
}

impl DppSolver {
    /// Solver on the lattice with the default spacing h = ε/8.
    pub fn new(domain: &Domain, params: &GameParams, dirs: &DirectionSet) -> Result<Self> {
        Self::with_spacing(domain, params, dirs, params.eps * DEFAULT_H_RATIO)
    }

    pub fn with_spacing(domain: &Domain, params: &GameParams, dirs: &DirectionSet, h: f64) -> Result<Self> {
        domain.validate()?;
        params.validate()?;
        if domain.dim() != params.n {
            return Err(Error::DimensionMismatch {
                expected: params.n,
                got: domain.dim(),
            });
        }
        if dirs.dim() != params.n {
            return Err(Error::DimensionMismatch {
                expected: params.n,
                got: dirs.dim(),
            });
        }
        let lattice = Lattice::covering(domain, params.eps, h)?;
        let n = params.n;
        let mut coords = vec![0.0; lattice.len() * n];
        for (i, chunk) in coords.chunks_mut(n).enumerate() {
            lattice.node_into(i, chunk);
        }
        let dist = coords.chunks(n).map(|x| domain.signed_dist_unchecked(x)).collect();
        Ok(DppSolver {
            domain: domain.clone(),
            params: *params,
            dirs: dirs.clone(),
            rule: BallRule::for_dim(n)?,
            lattice,
            times: TimeLevels::for_params(params),
            coords,
            dist,
        })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn params(&self) -> &GameParams {
        &self.params
    }

    pub fn dirs(&self) -> &DirectionSet {
        &self.dirs
    }

    pub fn rule(&self) -> &BallRule {
        &self.rule
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn times(&self) -> TimeLevels {
        self.times
    }

    pub fn node(&self, i: usize) -> &[f64] {
        let n = self.params.n;
        &self.coords[i * n..(i + 1) * n]
    }

    /// Signed distance to ∂Ω of every lattice node.
    pub fn node_distances(&self) -> &[f64] {
        &self.dist
    }

    fn midrange_at(&self, view: &LevelView<'_>, i: usize) -> Result<f64> {
        DirectionSearch::new(view, self.node(i), &self.params, &self.rule, &self.dirs)?.midrange_value()
    }

    /// F(·, t) at every node.
    pub fn sample(&self, f: &BoundaryData, t: f64) -> Vec<f64> {
        (0..self.lattice.len()).map(|i| f.eval(self.node(i), t)).collect()
    }

    /// One application of T: (1 − δ) midrange 𝒜_ε prev + δ F(·, t).
    pub fn apply_t(&self, prev: &[f64], t: f64, f: &BoundaryData) -> Result<Vec<f64>> {
        if prev.len() != self.lattice.len() {
            return Err(Error::LatticeMismatch);
        }
        let view = LevelView {
            lattice: &self.lattice,
            values: prev,
        };
        let eps = self.params.eps;
        (0..self.lattice.len())
            .into_par_iter()
            .with_min_len(64)
            .map(|i| {
                let delta = delta_from_dist(self.dist[i], t, eps);
                if delta >= 1.0 {
                    return Ok(f.eval(self.node(i), t));
                }
                let mid = self.midrange_at(&view, i)?;
                if delta == 0.0 {
                    Ok(mid)
                } else {
                    Ok((1.0 - delta) * mid + delta * f.eval(self.node(i), t))
                }
            })
            .collect()
    }

    /// Marches level by level, handing each level to `visit` without storing
    /// the history; returns the final level.
    pub fn march<V>(&self, f: &BoundaryData, mut visit: V) -> Result<Vec<f64>>
    where
        V: FnMut(usize, f64, &[f64]) -> Result<()>,
    {
        let mut current = self.sample(f, self.times.time(0));
        visit(0, self.times.time(0), &current)?;
        for k in 1..=self.times.count {
            let t = self.times.time(k);
            current = self.apply_t(&current, t, f)?;
            visit(k, t, &current)?;
        }
        Ok(current)
    }

    pub fn solve(&self, f: &BoundaryData) -> Result<GridFunction> {
        let mut levels = Vec::with_capacity(self.times.count + 1);
        self.march(f, |_, _, level| {
            levels.push(level.to_vec());
            Ok(())
        })?;
        GridFunction::new(
            self.domain.clone(),
            self.params,
            self.lattice.clone(),
            self.times,
            levels,
        )
    }

    /// max over k ≥ 1 and nodes of |u_k − T u_{k−1}|.
    pub fn residual(&self, u: &GridFunction, f: &BoundaryData) -> Result<f64> {
        if u.lattice() != &self.lattice || u.times() != self.times {
            return Err(Error::LatticeMismatch);
        }
        let mut worst = 0.0f64;
        for k in 1..u.num_levels() {
            let next = self.apply_t(u.level(k - 1), u.time(k), f)?;
            for (a, b) in next.iter().zip(u.level(k)) {
                worst = worst.max((a - b).abs());
            }
        }
        Ok(worst)
    }

    fn apply_elliptic(&self, prev: &[f64], psi: &[f64]) -> Result<Vec<f64>> {
        let view = LevelView {
            lattice: &self.lattice,
            values: prev,
        };
        let eps = self.params.eps;
        (0..self.lattice.len())
            .into_par_iter()
            .with_min_len(64)
            .map(|i| {
                let delta = delta_bar_from_dist(self.dist[i], eps);
                if delta >= 1.0 {
                    return Ok(psi[i]);
                }
                let mid = self.midrange_at(&view, i)?;
                if delta == 0.0 {
                    Ok(mid)
                } else {
                    Ok((1.0 - delta) * mid + delta * psi[i])
                }
            })
            .collect()
    }

    /// Picard iteration for U = (1 − δ̄) midrange 𝒜_ε U + δ̄ ψ, run from
    /// both constant barriers min ψ and max ψ.
    pub fn solve_elliptic<P>(&self, psi: P, tol: f64, max_iter: usize) -> Result<EllipticSolution>
    where
        P: Fn(&[f64]) -> f64,
    {
        if !(tol > 0.0) {
            return Err(Error::InvalidParams(format!("tolerance {tol} must be positive")));
        }
        let eps = self.params.eps;
        let psi_vals: Vec<f64> = (0..self.lattice.len()).map(|i| psi(self.node(i))).collect();
        let (lo_c, hi_c) = psi_vals
            .iter()
            .zip(&self.dist)
            .filter(|(_, d)| delta_bar_from_dist(**d, eps) > 0.0)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (v, _)| {
                (a.min(*v), b.max(*v))
            });
        let mut lo = vec![lo_c; self.lattice.len()];
        let mut hi = vec![hi_c; self.lattice.len()];
        let mut residual = f64::INFINITY;
        for iter in 0..max_iter {
            let lo_next = self.apply_elliptic(&lo, &psi_vals)?;
            let hi_next = self.apply_elliptic(&hi, &psi_vals)?;
            let res_lo = sup_diff(&lo_next, &lo);
            let res_hi = sup_diff(&hi_next, &hi);
            let gap = sup_diff(&hi, &lo);
            residual = res_lo.max(res_hi);
            if res_lo <= tol && res_hi <= tol && gap <= 2.0 * tol {
                return Ok(EllipticSolution {
                    lattice: self.lattice.clone(),
                    domain: self.domain.clone(),
                    eps,
                    values: lo,
                    iterations: iter,
                    residual: res_lo,
                    barrier_gap: gap,
                });
            }
            lo = lo_next;
            hi = hi_next;
        }
        Err(Error::MaxIterations { max_iter, residual })
    }

    /// sup |U − T_ell U| over the lattice.
    pub fn elliptic_residual<P>(&self, u: &EllipticSolution, psi: P) -> Result<f64>
    where
        P: Fn(&[f64]) -> f64,
    {
        let psi_vals: Vec<f64> = (0..self.lattice.len()).map(|i| psi(self.node(i))).collect();
        Ok(sup_diff(&self.apply_elliptic(&u.values, &psi_vals)?, &u.values))
    }
}

pub(crate) fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Lattice values of the time-independent DPP solution.
#[derive(Debug, Clone, Serialize)]
pub struct EllipticSolution {
    pub lattice: Lattice,
    pub domain: Domain,
    pub eps: f64,
    pub values: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub barrier_gap: f64,
}

impl EllipticSolution {
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        let d = self.domain.signed_dist(x)?;
        if d < -self.eps - crate::grid::PADDING_TOL {
            return Err(Error::OutsideDomain { point: x.to_vec() });
        }
        self.lattice.interpolate(&self.values, x)
    }
}

impl SpatialFn for EllipticSolution {
    fn eval(&self, x: &[f64]) -> Result<f64> {
        self.value(x)
    }
}

pub fn apply_t(
    prev: &[f64],
    t: f64,
    f: &BoundaryData,
    params: &GameParams,
    domain: &Domain,
    dirs: &DirectionSet,
) -> Result<Vec<f64>> {
    DppSolver::new(domain, params, dirs)?.apply_t(prev, t, f)
}

pub fn solve_parabolic_dpp(
    domain: &Domain,
    params: &GameParams,
    f: &BoundaryData,
    dirs: &DirectionSet,
) -> Result<GridFunction> {
    DppSolver::new(domain, params, dirs)?.solve(f)
}

pub fn solve_elliptic_dpp<P>(
    domain: &Domain,
    params: &GameParams,
    psi: P,
    tol: f64,
    max_iter: usize,
    dirs: &DirectionSet,
) -> Result<EllipticSolution>
where
    P: Fn(&[f64]) -> f64,
{
    DppSolver::new(domain, params, dirs)?.solve_elliptic(psi, tol, max_iter)
}

/// Residual of `u` under the same lattice spacing and direction settings.
pub fn dpp_residual(u: &GridFunction, f: &BoundaryData, dirs: &DirectionSet) -> Result<f64> {
    DppSolver::with_spacing(u.domain(), u.params(), dirs, u.lattice().h())?.residual(u, f)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Order {
    Equal,
    Leq,
    Geq,
    Incomparable,
}

/// Pointwise order between two grid functions on the same lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Comparison {
    pub order: Order,
    /// max(u − v, 0): the violation of u ≤ v.
    pub leq_violation: f64,
    /// max(v − u, 0): the violation of u ≥ v.
    pub geq_violation: f64,
    pub max_gap: f64,
}

impl Comparison {
    pub fn is_leq(&self) -> bool {
        matches!(self.order, Order::Leq | Order::Equal)
    }

    pub fn is_geq(&self) -> bool {
        matches!(self.order, Order::Geq | Order::Equal)
    }
}

pub fn compare_solutions(u: &GridFunction, v: &GridFunction) -> Result<Comparison> {
    if !u.same_lattice(v) {
        return Err(Error::LatticeMismatch);
    }
    let mut up = 0.0f64;
    let mut down = 0.0f64;
    for (a, b) in u.levels().iter().flatten().zip(v.levels().iter().flatten()) {
        up = up.max(a - b);
        down = down.max(b - a);
    }
    let order = match (up > 0.0, down > 0.0) {
        (false, false) => Order::Equal,
        (false, true) => Order::Leq,
        (true, false) => Order::Geq,
        (true, true) => Order::Incomparable,
    };
    Ok(Comparison {
        order,
        leq_violation: up,
        geq_violation: down,
        max_gap: up.max(down),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn setup_1d(eps: f64, horizon: f64) -> DppSolver {
        let dom = Domain::interval(0.0, 1.0);
        let p = GameParams::from_p(1, eps, 2.0, horizon).unwrap();
        DppSolver::new(&dom, &p, &DirectionSet::default_for(1).unwrap()).unwrap()
    }

    fn setup_disk(eps: f64, horizon: f64) -> DppSolver {
        let dom = Domain::ball([0.0, 0.0], 1.0);
        let p = GameParams::from_p(2, eps, 3.0, horizon).unwrap();
        DppSolver::new(&dom, &p, &DirectionSet::coarse(2, 16).unwrap()).unwrap()
    }

    #[test]
    fn constant_data_gives_constant_solution() {
        for s in [setup_1d(0.1, 0.3), setup_disk(0.3, 0.2)] {
            let u = s.solve(&BoundaryData::constant(1.5)).unwrap();
            for v in u.levels().iter().flatten() {
                assert_abs_diff_eq!(*v, 1.5, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn apply_t_on_linear_interior() {
        let s = setup_disk(0.3, 0.5);
        let a = [0.4, -0.9];
        let prev: Vec<f64> = (0..s.lattice().len())
            .map(|i| a[0] * s.node(i)[0] + a[1] * s.node(i)[1])
            .collect();
        let f = BoundaryData::constant(7.0);
        let out = s.apply_t(&prev, 0.45, &f).unwrap();
        for i in 0..out.len() {
            let d = s.node_distances()[i];
            if d >= 0.3 {
                assert_abs_diff_eq!(out[i], prev[i], epsilon = 1e-12);
            } else if d <= 0.0 {
                assert_eq!(out[i], 7.0);
            }
        }
    }

    #[test]
    fn quadratic_is_exact_solution() {
        // x² + 2αt satisfies the 1-d DPP and jumps of ±ε land on nodes
        let s = setup_1d(0.1, 0.3);
        let alpha = s.params().alpha;
        let exact = move |x: &[f64], t: f64| x[0] * x[0] + 2.0 * alpha * t;
        let u = s.solve(&BoundaryData::new(exact)).unwrap();
        for k in 0..u.num_levels() {
            for i in 0..s.lattice().len() {
                assert_abs_diff_eq!(u.level(k)[i], exact(s.node(i), u.time(k)), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn residual_of_solution_is_zero_and_detects_perturbation() {
        let s = setup_1d(0.1, 0.2);
        let f = BoundaryData::new(|x: &[f64], t: f64| (3.0 * x[0]).sin() + t);
        let mut u = s.solve(&f).unwrap();
        assert_eq!(s.residual(&u, &f).unwrap(), 0.0);
        let node = s.lattice().nearest_index(&[0.5]).unwrap();
        u.level_mut(3)[node] += 1e-3;
        assert!(s.residual(&u, &f).unwrap() >= 0.5e-3);
    }

    #[test]
    fn comparison_with_shifted_data() {
        let s = setup_1d(0.1, 0.2);
        let f = BoundaryData::new(|x: &[f64], t: f64| x[0] * x[0] - t);
        let g = BoundaryData::new(|x: &[f64], t: f64| x[0] * x[0] - t + 1.0);
        let u = s.solve(&f).unwrap();
        let v = s.solve(&g).unwrap();
        let c = compare_solutions(&u, &v).unwrap();
        assert_eq!(c.order, Order::Leq);
        assert_abs_diff_eq!(c.max_gap, 1.0, epsilon = 1e-12);
        assert_eq!(compare_solutions(&u, &u).unwrap().order, Order::Equal);
        let w = s.solve(&BoundaryData::new(|x: &[f64], _| 0.5 - x[0])).unwrap();
        assert_eq!(compare_solutions(&u, &w).unwrap().order, Order::Incomparable);
        let other = setup_1d(0.2, 0.2).solve(&f).unwrap();
        assert!(matches!(compare_solutions(&u, &other), Err(Error::LatticeMismatch)));
    }

    #[test]
    fn elliptic_constant_and_symmetric() {
        let dom = Domain::interval(-1.0, 1.0);
        let p = GameParams::from_p(1, 0.2, 2.0, 1.0).unwrap();
        let s = DppSolver::new(&dom, &p, &DirectionSet::default_for(1).unwrap()).unwrap();
        let c = s.solve_elliptic(|_| 0.3, 1e-9, 10).unwrap();
        assert_eq!(c.iterations, 0);
        assert!(c.values.iter().all(|v| (v - 0.3).abs() <= 1e-15));

        let psi = |x: &[f64]| if x[0] > 0.0 { 1.0 } else { 0.0 };
        let u = s.solve_elliptic(psi, 1e-9, 1_000_000).unwrap();
        assert_abs_diff_eq!(u.value(&[0.0]).unwrap(), 0.5, epsilon = 1e-9);
        assert!(s.elliptic_residual(&u, psi).unwrap() <= 1e-9);
        assert!(matches!(
            s.solve_elliptic(psi, 1e-12, 3),
            Err(Error::MaxIterations { max_iter: 3, .. })
        ));
    }
}
