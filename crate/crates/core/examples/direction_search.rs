//! Midrange of 𝒜_ε over unit directions for a smooth function in 2-d and
//! 3-d, with and without local refinement of the best grid direction.

use towpde::geometry::GameParams;
use towpde::quadrature::{midrange_over_directions, BallRule, DirectionSet, FnSlice, Refinement};

fn main() -> towpde::error::Result<()> {
    let g2 = FnSlice(|x: &[f64]| (3.0 * x[0] + x[1]).sin() + x[1] * x[1]);
    let g3 = FnSlice(|x: &[f64]| x[0] * x[1] - x[2] + (x[2] * 2.0).cos());
    for (n, count) in [(2, 16), (2, 64), (3, 50), (3, 194)] {
        let params = GameParams::from_p(n, 0.1, 3.0, 1.0)?;
        let rule = BallRule::for_dim(n)?;
        let x = vec![0.2; n];
        let refined = DirectionSet::new(n, count, Refinement::LocalBracket { theta_tol: 1e-6 })?;
        for dirs in [DirectionSet::coarse(n, count)?, refined] {
            let m = if n == 2 {
                midrange_over_directions(&g2, &x, &params, &rule, &dirs)?
            } else {
                midrange_over_directions(&g3, &x, &params, &rule, &dirs)?
            };
            println!(
                "n = {n}, {count:>3} directions, {:?}: max {:.9}, min {:.9}, midrange {:.9}",
                dirs.refinement(),
                m.max,
                m.min,
                m.value
            );
        }
    }
    Ok(())
}
