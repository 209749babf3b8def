//! Both sides of the integral inequality for Borell's function, and a witness
//! search for a power product just outside its admissible region.

use std::sync::Arc;

use bellman_core::catalog::{BorellB, PowerProduct};
use bellman_core::flows::{Datum, GaussianBump, MollifiedInterval};
use bellman_core::verify::{gmc_converse_search, gmc_sides, GmcOptions};
use bellman_core::{ColumnSystem, SymMatrix};

fn main() -> bellman_core::Result<()> {
    let p = 0.3;
    let data: Vec<Arc<dyn Datum>> = vec![
        Arc::new(GaussianBump::new(0.2, 0.8, 0.6, 0.2)?),
        Arc::new(MollifiedInterval::with_levels(-0.5, 1.0, 0.4, 0.1, 0.9)?),
    ];
    let sys = ColumnSystem::correlated_pair(p)?;
    let c = SymMatrix::identity(2);
    let s = gmc_sides(&BorellB::new(p)?, &sys, &c, &data, GmcOptions::default())?;
    println!("integral {:.12} bound {:.12} delta {:.3e}", s.integral, s.bound, s.delta());

    let p = 0.5;
    let a = 1.0 + 0.5f64.sqrt() * p;
    let sys = ColumnSystem::correlated_pair(p)?;
    let (r, w) = gmc_converse_search(&PowerProduct::new(a, a)?, &sys, &c, &[1.0, 1.0], 0.1, 1e-6)?;
    match w {
        Some(w) => println!("witness: delta {:.3e} at width {} centre {}", w.delta, w.width, w.center),
        None => println!("no witness ({:?})", r.verdict),
    }
    Ok(())
}
