//! Minimum of `V(x, t) = B(u(x, t))` for the Ehrhard triple whose third datum
//! is a sup-convolution majorant of the first two.

use std::sync::Arc;

use bellman_core::flows::{GaussianBump, MollifiedInterval};
use bellman_core::grid::GridSpec;
use bellman_core::verify::{hill_evolution, HillSetup};

fn main() -> bellman_core::Result<()> {
    let u1 = Arc::new(MollifiedInterval::with_levels(-1.0, 1.0, 0.5, 0.05, 0.9)?);
    let u2 = Arc::new(GaussianBump::new(0.5, 1.0, 0.7, 0.1)?);
    let s = HillSetup::ehrhard([0.6, 0.6], u1, u2, 0.01, 10.0)?;
    println!("sup-convolution lift eps_h = {:.3e}", s.eps_h);
    let space = GridSpec::uniform(2, -4.0, 4.0, 21)?;
    let r = hill_evolution(s.b, &s.sys, &s.c, &s.data, 1.0, &space, 6, 1e-6)?;
    println!(
        "min V = {:.6e} over {} points ({:?}), boundary min {:.6e}",
        r.extra("min_v").unwrap_or(f64::NAN),
        r.grid,
        r.verdict,
        r.extra("boundary_min").unwrap_or(f64::NAN)
    );
    Ok(())
}
