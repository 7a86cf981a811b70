use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dpp::BoundaryData;
use crate::error::{Error, Result};
use crate::geometry::{Domain, BOUNDARY_TOL};
use crate::grid::GridFunction;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanSpec {
    pub pairs: usize,
    pub seed: u64,
    /// Lipschitz constant of F; falls back to the one stored in the data.
    pub lipschitz: Option<f64>,
    /// Largest |x − y| for the near-boundary strata.
    pub near_radius: f64,
}

impl Default for ScanSpec {
    fn default() -> Self {
        ScanSpec {
            pairs: 1000,
            seed: 20_240_601,
            lipschitz: None,
            near_radius: 0.3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stratum {
    NearLateral,
    NearInitial,
    InteriorVsBoundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanPair {
    pub stratum: Stratum,
    pub diff: f64,
    pub shape: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanReport {
    pub eps: f64,
    pub lipschitz: f64,
    pub max_ratio: f64,
    pub max_ratio_lateral: f64,
    pub max_ratio_initial: f64,
    pub max_ratio_interior: f64,
    pub pairs: usize,
}

/// Random boundary point: the nearest boundary point of a uniform sample
/// from the bounding box.
fn boundary_point<R: Rng>(domain: &Domain, rng: &mut R) -> Result<Vec<f64>> {
    let (lo, hi) = domain.bounding_box();
    let x: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| rng.gen_range(*a..*b)).collect();
    domain.nearest_boundary_point(&x)
}

/// Random lattice node in Ω̄ within `radius` of `y` (or anywhere when `y` is None).
fn interior_node<R: Rng>(u: &GridFunction, y: Option<&[f64]>, radius: f64, rng: &mut R) -> Result<Vec<f64>> {
    let domain = u.domain();
    let (lo, hi) = domain.bounding_box();
    for _ in 0..10_000 {
        let x: Vec<f64> = match y {
            Some(y) => y.iter().map(|c| c + rng.gen_range(-radius..radius)).collect(),
            None => lo.iter().zip(&hi).map(|(a, b)| rng.gen_range(*a..*b)).collect(),
        };
        let Some(idx) = u.lattice().nearest_index(&x) else {
            continue;
        };
        let node = u.lattice().node(idx);
        if domain.signed_dist(&node)? > BOUNDARY_TOL {
            return Ok(node);
        }
    }
    Err(Error::InvalidParams("could not sample an interior lattice node".into()))
}

/// Worst ratio of |u(x,t) − u(y,s)| to the boundary-regularity shapes:
/// lateral pairs against (K + K^½) + L(|x−y| + |t−s|^½ + 2ρ) with
/// K = min{|x−y|, t} + ε and ρ the exterior-ball radius at y; initial pairs
/// against |x−y| + t^½ + ε.
pub fn boundary_modulus_scan(u: &GridFunction, f: &BoundaryData, spec: &ScanSpec) -> Result<ScanReport> {
    let domain = u.domain();
    let params = u.params();
    let eps = params.eps;
    let lip = spec
        .lipschitz
        .or(f.lipschitz())
        .ok_or_else(|| Error::InvalidParams("boundary modulus scan needs a Lipschitz constant for F".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let last = u.num_levels() - 1;
    let positive_level = |rng: &mut ChaCha8Rng| -> usize {
        let first = (1..=last).find(|&k| u.time(k) > 0.0).unwrap_or(last);
        rng.gen_range(first..=last)
    };
    let mut out = Vec::with_capacity(spec.pairs);
    for i in 0..spec.pairs {
        let stratum = match i % 3 {
            0 => Stratum::NearLateral,
            1 => Stratum::NearInitial,
            _ => Stratum::InteriorVsBoundary,
        };
        let pair = match stratum {
            Stratum::NearLateral | Stratum::InteriorVsBoundary => {
                let y = boundary_point(domain, &mut rng)?;
                let (_, rho) = domain.exterior_sphere(&y, eps)?;
                let x = if stratum == Stratum::NearLateral {
                    interior_node(u, Some(&y), spec.near_radius, &mut rng)?
                } else {
                    interior_node(u, None, 0.0, &mut rng)?
                };
                let (kt, ks) = (positive_level(&mut rng), positive_level(&mut rng));
                let (t, s) = (u.time(kt), u.time(ks));
                let diff = (u.value_at_level(&x, kt)? - f.eval(&y, s)).abs();
                let dxy = dist(&x, &y);
                let k = dxy.min(t) + eps;
                let shape = k + k.sqrt() + lip * (dxy + (t - s).abs().sqrt() + 2.0 * rho);
                ScanPair {
                    stratum,
                    diff,
                    shape,
                    ratio: diff / shape,
                }
            }
            Stratum::NearInitial => {
                let y = interior_node(u, None, 0.0, &mut rng)?;
                let x = interior_node(u, Some(&y), spec.near_radius, &mut rng)?;
                let kt = rng.gen_range(0..=last);
                let t = u.time(kt).max(0.0);
                let diff = (u.value_at_level(&x, kt)? - f.eval(&y, u.time(0))).abs();
                let shape = dist(&x, &y) + t.sqrt() + eps;
                ScanPair {
                    stratum,
                    diff,
                    shape,
                    ratio: diff / shape,
                }
            }
        };
        out.push(pair);
    }
    let max_of = |s: Option<Stratum>| {
        out.iter()
            .filter(|p| s.is_none_or(|s| p.stratum == s))
            .map(|p| p.ratio)
            .fold(0.0, f64::max)
    };
    Ok(ScanReport {
        eps,
        lipschitz: lip,
        max_ratio: max_of(None),
        max_ratio_lateral: max_of(Some(Stratum::NearLateral)),
        max_ratio_initial: max_of(Some(Stratum::NearInitial)),
        max_ratio_interior: max_of(Some(Stratum::InteriorVsBoundary)),
        pairs: out.len(),
    })
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}
