//! The first-type condition for Borell's function holds with equality in the
//! determinant: the modified Hessian is negative semidefinite and singular.

use bellman_core::catalog::BorellB;
use bellman_core::grid::GridSpec;
use bellman_core::pde::check_first_type;
use bellman_core::{ColumnSystem, SymMatrix};

fn main() -> bellman_core::Result<()> {
    let grid = GridSpec::uniform(2, 0.05, 0.95, 21)?;
    for p in [0.1, 0.5, 0.9] {
        let b = BorellB::new(p)?;
        let sys = ColumnSystem::correlated_pair(p)?;
        let r = check_first_type(&b, &sys, &SymMatrix::identity(2), &grid, 1e-6)?;
        println!(
            "p = {p}: {:?}, worst eigenvalue {:.3e}, worst relative det {:.3e}",
            r.verdict,
            r.extra("worst_eigenvalue").unwrap_or(f64::NAN),
            r.extra("worst_determinant").unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
