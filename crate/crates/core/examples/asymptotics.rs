//! Long-time behavior: with data that switches from φ to a stationary ψ,
//! the parabolic DPP solution approaches the time-independent one.

use std::sync::Arc;

use towpde::analysis::{asymptotic_study, AsymptoticSetup};
use towpde::geometry::{Domain, GameParams};
use towpde::quadrature::DirectionSet;

fn main() -> towpde::error::Result<()> {
    let setup = AsymptoticSetup {
        domain: Domain::interval(0.0, 1.0),
        params: GameParams::from_p(1, 0.1, 3.0, 1.0)?,
        dirs: DirectionSet::default_for(1)?,
        h: 0.0125,
        psi: Arc::new(|x: &[f64]| x[0] * x[0]),
        phi_init: Arc::new(|x: &[f64], _| (5.0 * x[0]).cos()),
        elliptic_tol: 1e-11,
        max_iter: 1_000_000,
    };
    let report = asymptotic_study(&setup, &[3, 10, 100, 1_000, 10_000])?;
    for row in &report.rows {
        println!(
            "level {:>6}  t = {:>8.3}  sup|u − U| = {:.3e}",
            row.level, row.t, row.sup_diff
        );
    }
    println!(
        "non-increasing: {}, barriers monotone: {}/{}",
        report.nonincreasing_after_level_2, report.lower_barrier_monotone, report.upper_barrier_monotone
    );
    Ok(())
}
