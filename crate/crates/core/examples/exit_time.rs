//! Expected number of steps for the pulling player to reach the inner ball
//! of an annulus, against the radial barrier w.

use towpde::analysis::RadialW;
use towpde::game::{AnnulusGame, RngSpec};

fn main() -> towpde::error::Result<()> {
    let (delta, outer) = (0.25, 1.0);
    println!(
        "{:>6} {:>6} {:>5} {:>10} {:>10} {:>8}",
        "alpha", "eps", "r0", "E[tau]", "eps^2 E", "w(r0)"
    );
    for alpha in [0.25, 0.5] {
        for eps in [0.1, 0.05] {
            let game = AnnulusGame::new(vec![0.0, 0.0], delta, outer, eps, alpha)?;
            let w = RadialW::new(2, alpha, delta, outer, eps)?;
            for r0 in [0.4, 0.6, 0.8] {
                let est = game.estimate(&[r0, 0.0], 2_000, RngSpec::new(7))?;
                println!(
                    "{alpha:>6} {eps:>6} {r0:>5} {:>10.1} {:>10.4} {:>8.4}",
                    est.mean,
                    eps * eps * est.mean,
                    w.value(r0)?
                );
            }
        }
    }
    Ok(())
}
