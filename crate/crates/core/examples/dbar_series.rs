//! Bessel-series solutions of `∂f/∂z̄ = f̄`, the hodograph maps, and the
//! Monge–Ampère residual of Borell's function.

use bellman_core::catalog::BorellB;
use bellman_core::dbar::{dbar_check, disk_points, hodograph_maps, monge_ampere_residual, DbarSolution};
use bellman_core::grid::GridSpec;

fn main() -> bellman_core::Result<()> {
    let pts = disk_points(1.0, 10, 20);
    for (k, v) in [(0, (1.0, 0.0)), (1, (0.0, 1.0))] {
        let sol = DbarSolution::single(k, v, 30)?;
        let r = dbar_check(&sol, &pts, 1e-4, 1e-5)?;
        println!("c_{k} = {v:?}: max residual {:.2e} ({:?})", r.max_residual, r.verdict);
    }
    for c in [1.5, -2.0, 7.0] {
        let m = hodograph_maps(c)?;
        println!("c = {c}: compatibility {:.2e}", m.compatibility()?);
    }
    let r = monge_ampere_residual(&BorellB::new(0.5)?, 2.0, &GridSpec::uniform(2, 0.05, 0.95, 21)?, 1e-6)?;
    println!("Borell p = 1/2, c = 2: Monge–Ampère residual {:.2e}", r.max_residual);
    Ok(())
}
