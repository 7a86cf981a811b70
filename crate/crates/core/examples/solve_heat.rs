//! Solves the parabolic DPP on (0, 1) with p = 2 and compares against the
//! closed-form solution e^{−π²t/3} sin(πx) as ε shrinks.

use towpde::analysis::{convergence_study, heat_reference};
use towpde::dpp::DppSolver;
use towpde::geometry::{Domain, GameParams};
use towpde::quadrature::DirectionSet;

fn main() -> towpde::error::Result<()> {
    let domain = Domain::interval(0.0, 1.0);
    let params = GameParams::from_p(1, 0.1, 2.0, 0.5)?;
    let dirs = DirectionSet::default_for(1)?;
    let reference = heat_reference(1, 2.0)?;

    let solver = DppSolver::new(&domain, &params, &dirs)?;
    let f = reference.boundary_data(params.horizon);
    let u = solver.solve(&f)?;
    let t = u.time(u.num_levels() - 1);
    println!(
        "{} levels on {} nodes, residual {:e}",
        u.num_levels(),
        solver.lattice().len(),
        solver.residual(&u, &f)?
    );
    for x in [0.1, 0.3, 0.5] {
        println!(
            "u({x}, {t:.3}) = {:.6}   exact {:.6}",
            u.value(&[x], t)?,
            reference.value(&[x], t)
        );
    }

    let table = convergence_study(&domain, &reference, &[0.2, 0.1, 0.05, 0.025], &params, &dirs, None)?;
    println!("\n{:>8} {:>10} {:>12}", "eps", "h", "sup error");
    for row in &table.rows {
        println!("{:>8} {:>10} {:>12.3e}", row.eps, row.h, row.sup_error);
    }
    println!("verdict: {:?}, improvement {:.0}x", table.verdict, table.improvement());
    Ok(())
}
