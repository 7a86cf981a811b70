//! Plays the tug-of-war game with both players greedy with respect to the
//! DPP solution, compares the Monte Carlo value with the DPP value, then
//! checks the supermartingale property against a random player I.

use towpde::dpp::{BoundaryData, DppSolver};
use towpde::game::{
    estimate_value, greedy_strategy, martingale_diagnostic, simulate, HashedRandomStrategy, Player, RngSpec,
};
use towpde::geometry::{Domain, GameParams, SpaceTimePoint};
use towpde::quadrature::DirectionSet;

fn main() -> towpde::error::Result<()> {
    let domain = Domain::ball([0.0, 0.0], 1.0);
    let params = GameParams::from_p(2, 0.2, 3.0, 0.2)?;
    let dirs = DirectionSet::default_for(2)?;
    let f = BoundaryData::new(|x: &[f64], t: f64| x[0] * x[0] - x[1] + t);
    let u = DppSolver::new(&domain, &params, &dirs)?.solve(&f)?;
    let t0 = u.time(u.num_levels() - 1);

    let s_i = greedy_strategy(&u, Player::I, &dirs)?;
    let s_ii = greedy_strategy(&u, Player::II, &dirs)?;
    for x0 in [[0.0, 0.0], [0.4, -0.3]] {
        let z0 = SpaceTimePoint::new(x0, t0);
        let est = estimate_value(&z0, &s_i, &s_ii, &params, &domain, &f, 20_000, RngSpec::new(42))?;
        println!(
            "start {x0:?}: game {:.5} ± {:.5}, DPP {:.5}",
            est.mean,
            est.stderr,
            u.value(&x0, t0)?
        );
    }

    let random = HashedRandomStrategy::new(2, 7);
    let z0 = SpaceTimePoint::new([0.2, 0.1], t0);
    let trajectories = simulate(
        &z0,
        &random,
        &s_ii,
        &params,
        &domain,
        &f,
        5_000,
        RngSpec::new(3),
        |tr| tr,
    )?;
    let report = martingale_diagnostic(&trajectories, |c, z, _| {
        if c == 1 {
            f.eval(&z.x, z.t)
        } else {
            u.value(&z.x, z.t).unwrap_or(f64::NAN)
        }
    })?;
    println!(
        "\nrandom I vs greedy II: {} steps checked, flagged {:?}, largest mean drift {:.2e}",
        report.steps.len(),
        report.flagged_steps(),
        report.max_drift()
    );
    Ok(())
}
