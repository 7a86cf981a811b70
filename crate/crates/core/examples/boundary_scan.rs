//! Samples |u(x,t) − F(y,s)| near the parabolic boundary and reports the
//! worst ratio to the boundary-regularity shape for decreasing ε.

use towpde::analysis::{boundary_modulus_scan, ScanSpec};
use towpde::dpp::{BoundaryData, DppSolver};
use towpde::geometry::{Domain, GameParams};
use towpde::quadrature::DirectionSet;

fn main() -> towpde::error::Result<()> {
    let domain = Domain::ball([0.0, 0.0], 1.0);
    let dirs = DirectionSet::coarse(2, 32)?;
    let f = BoundaryData::new(|x: &[f64], t: f64| (2.0 * x[0]).sin() + 0.5 * x[1] + t).with_lipschitz(3.0);
    for eps in [0.3, 0.2, 0.1] {
        let params = GameParams::from_p(2, eps, 3.0, 0.2)?;
        let u = DppSolver::new(&domain, &params, &dirs)?.solve(&f)?;
        let rep = boundary_modulus_scan(&u, &f, &ScanSpec::default())?;
        println!(
            "eps {eps:<4} max ratio {:.3} (lateral {:.3}, initial {:.3}, interior {:.3})",
            rep.max_ratio, rep.max_ratio_lateral, rep.max_ratio_initial, rep.max_ratio_interior
        );
    }
    Ok(())
}
