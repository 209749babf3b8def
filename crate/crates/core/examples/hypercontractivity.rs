//! Norm ratio `‖P_t g‖_Q / ‖g‖_P` for exponentials on and beyond the
//! admissible boundary.

use std::sync::Arc;

use bellman_core::pde::hyper_region_pqt;
use bellman_core::verify::{hypercontractivity_verify, HyperTest};

fn main() -> bellman_core::Result<()> {
    let p: f64 = 2.0;
    for t in [0.2f64, 0.5] {
        for factor in [1.0, 1.5] {
            let q = 1.0 + factor * (2.0 * t).exp() * (p - 1.0);
            for c in [0.5, 1.0, 2.0] {
                let g = HyperTest::General(Arc::new(move |x: f64| (c * x).exp()));
                let r = hypercontractivity_verify(p, q, t, &g, 1e-6)?;
                println!(
                    "t={t} Q={q:.4} c={c}: ratio {:.12} admissible {}",
                    r.extra("ratio").unwrap_or(f64::NAN),
                    hyper_region_pqt(p, q, t)
                );
            }
        }
    }
    Ok(())
}
