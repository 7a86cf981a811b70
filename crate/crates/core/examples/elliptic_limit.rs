//! Time-independent DPP in the unit disk by monotone iteration from both
//! constant barriers.

use towpde::dpp::DppSolver;
use towpde::geometry::{Domain, GameParams};
use towpde::quadrature::DirectionSet;

fn main() -> towpde::error::Result<()> {
    let domain = Domain::ball([0.0, 0.0], 1.0);
    let params = GameParams::from_p(2, 0.25, 4.0, 1.0)?;
    let solver = DppSolver::new(&domain, &params, &DirectionSet::coarse(2, 32)?)?;
    let psi = |x: &[f64]| x[0] * x[0] - x[1];
    let sol = solver.solve_elliptic(psi, 1e-8, 100_000)?;
    println!(
        "{} iterations, residual {:.2e}, barrier gap {:.2e}",
        sol.iterations, sol.residual, sol.barrier_gap
    );
    for x in [[0.0, 0.0], [0.5, 0.0], [0.0, 0.5], [-0.3, -0.6]] {
        println!("U({:?}) = {:.6}", x, sol.value(&x)?);
    }
    Ok(())
}
