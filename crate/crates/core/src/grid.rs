//! Uniform spatial lattices over Ω_ε and space-time grid functions.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Domain, GameParams};
use crate::quadrature::SpatialFn;

/// Slack on the ε-padding when deciding whether a point is inside Ω_ε.
pub const PADDING_TOL: f64 = 1e-9;

/// Uniform tensor lattice with spacing `h` covering the bounding box of Ω
/// padded by ε + h.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lattice {
    origin: Vec<f64>,
    h: f64,
    shape: Vec<usize>,
}

impl Lattice {
    pub fn covering(domain: &Domain, eps: f64, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidParams(format!("grid spacing h = {h} must be positive")));
        }
        let (lo, hi) = domain.bounding_box();
        let pad = eps + h;
        let origin: Vec<f64> = lo.iter().map(|a| a - pad).collect();
        let shape: Vec<usize> = lo
            .iter()
            .zip(&hi)
            .map(|(a, b)| ((b - a + 2.0 * pad) / h - 1e-9).ceil() as usize + 1)
            .collect();
        let total: usize = shape.iter().product();
        if total > 50_000_000 {
            return Err(Error::InvalidParams(format!("lattice with {total} nodes is too large")));
        }
        Ok(Lattice { origin, h, shape })
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coordinates of node `idx` (row-major, last axis fastest).
    pub fn node_into(&self, mut idx: usize, out: &mut [f64]) {
        for axis in (0..self.dim()).rev() {
            let i = idx % self.shape[axis];
            idx /= self.shape[axis];
            out[axis] = self.origin[axis] + i as f64 * self.h;
        }
    }

    pub fn node(&self, idx: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.node_into(idx, &mut out);
        out
    }

    /// Index of the node nearest to `x`, if `x` is within half a cell of the lattice.
    pub fn nearest_index(&self, x: &[f64]) -> Option<usize> {
        let mut idx = 0;
        for axis in 0..self.dim() {
            let s = ((x[axis] - self.origin[axis]) / self.h).round();
            if s < 0.0 || s >= self.shape[axis] as f64 {
                return None;
            }
            idx = idx * self.shape[axis] + s as usize;
        }
        Some(idx)
    }

    /// Multilinear interpolation of nodal `values` at `x`.
    pub fn interpolate(&self, values: &[f64], x: &[f64]) -> Result<f64> {
        let n = self.dim();
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x.len(),
            });
        }
        let mut base = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for axis in 0..n {
            let s = (x[axis] - self.origin[axis]) / self.h;
            let last = (self.shape[axis] - 1) as f64;
            if !(s >= -1e-9 && s <= last + 1e-9) {
                return Err(Error::OutsideDomain { point: x.to_vec() });
            }
            let i = (s.floor().max(0.0) as usize).min(self.shape[axis] - 2);
            base[axis] = i;
            frac[axis] = (s - i as f64).clamp(0.0, 1.0);
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut idx = 0;
            for axis in 0..n {
                let bit = (corner >> axis) & 1;
                w *= if bit == 1 { frac[axis] } else { 1.0 - frac[axis] };
                idx = idx * self.shape[axis] + base[axis] + bit;
            }
            if w != 0.0 {
                acc += w * values[idx];
            }
        }
        Ok(acc)
    }
}

/// Time levels t_k = t_0 + k·ε²/2, k = 0..=K, ending exactly at the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeLevels {
    pub offset: f64,
    pub step: f64,
    pub count: usize,
}

impl TimeLevels {
    /// K = ⌈T/(ε²/2)⌉ (rounded when T is a multiple of the step); the first
    /// level t_0 = T − K·ε²/2 lies in (−ε²/2, 0].
    pub fn for_params(params: &GameParams) -> Self {
        let step = params.time_step();
        let r = params.horizon / step;
        let k = if (r - r.round()).abs() <= 1e-9 * r.max(1.0) {
            r.round()
        } else {
            r.ceil()
        };
        let mut offset = params.horizon - k * step;
        if offset.abs() <= 1e-12 {
            offset = 0.0;
        }
        TimeLevels {
            offset,
            step,
            count: k as usize,
        }
    }

    pub fn time(&self, k: usize) -> f64 {
        self.offset + k as f64 * self.step
    }

    /// Level index of an aligned time.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let s = (t - self.offset) / self.step;
        let k = s.round();
        if (s - k).abs() > 1e-6 {
            return Err(Error::UnalignedTime { t, step: self.step });
        }
        if k < 0.0 {
            return Err(Error::BelowLevelZero { t });
        }
        if k > self.count as f64 {
            return Err(Error::UnalignedTime { t, step: self.step });
        }
        Ok(k as usize)
    }
}

/// Values of a function on a lattice at a sequence of time levels.
#[derive(Debug, Clone)]
pub struct GridFunction {
    domain: Domain,
    params: GameParams,
    lattice: Lattice,
    times: TimeLevels,
    levels: Vec<Vec<f64>>,
}

/// One time level viewed as a spatial function.
#[derive(Clone, Copy)]
pub struct LevelView<'a> {
    pub lattice: &'a Lattice,
    pub values: &'a [f64],
}

impl SpatialFn for LevelView<'_> {
    fn eval(&self, x: &[f64]) -> Result<f64> {
        self.lattice.interpolate(self.values, x)
    }
}

impl GridFunction {
    pub fn new(
        domain: Domain,
        params: GameParams,
        lattice: Lattice,
        times: TimeLevels,
        levels: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if levels.len() != times.count + 1 || levels.iter().any(|l| l.len() != lattice.len()) {
            return Err(Error::LatticeMismatch);
        }
        Ok(GridFunction {
            domain,
            params,
            lattice,
            times,
            levels,
        })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn params(&self) -> &GameParams {
        &self.params
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn times(&self) -> TimeLevels {
        self.times
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, k: usize) -> &[f64] {
        &self.levels[k]
    }

    pub fn levels(&self) -> &[Vec<f64>] {
        &self.levels
    }

    pub fn level_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.levels[k]
    }

    pub fn view(&self, k: usize) -> LevelView<'_> {
        LevelView {
            lattice: &self.lattice,
            values: &self.levels[k],
        }
    }

    pub fn time(&self, k: usize) -> f64 {
        self.times.time(k)
    }

    pub fn level_index(&self, t: f64) -> Result<usize> {
        self.times.index_of(t)
    }

    /// Interpolated value at an aligned time; `x` must lie in Ω_ε.
    pub fn value(&self, x: &[f64], t: f64) -> Result<f64> {
        let k = self.level_index(t)?;
        self.value_at_level(x, k)
    }

    pub fn value_at_level(&self, x: &[f64], k: usize) -> Result<f64> {
        let d = self.domain.signed_dist(x)?;
        if d < -self.params.eps - PADDING_TOL {
            return Err(Error::OutsideDomain { point: x.to_vec() });
        }
        self.lattice.interpolate(&self.levels[k], x)
    }

    pub fn sup_norm(&self) -> f64 {
        self.levels.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn same_lattice(&self, other: &GridFunction) -> bool {
        self.lattice == other.lattice && self.times == other.times
    }

    /// CSV rows `level,t,x1..xn,value` preceded by a schema line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        crate::output::write_schema_line(&mut w, "grid_function")?;
        let n = self.lattice.dim();
        let coords: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
        writeln!(w, "level,t,{},value", coords.join(","))?;
        let mut x = vec![0.0; n];
        for (k, level) in self.levels.iter().enumerate() {
            let t = self.time(k);
            for (i, v) in level.iter().enumerate() {
                self.lattice.node_into(i, &mut x);
                write!(w, "{k},{t}")?;
                for c in &x {
                    write!(w, ",{c}")?;
                }
                writeln!(w, ",{v}")?;
            }
        }
        Ok(())
    }
}
