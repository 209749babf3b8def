//! Builds the admissible `C` for a coefficient vector and checks the reduced
//! condition of the Φ-composition with equality.

use bellman_core::catalog::PhiComposition;
use bellman_core::grid::GridSpec;
use bellman_core::pde::{construct_c_for_b, reduced_h_condition, HMode};
use bellman_core::profile::ProfileFunction;

fn main() -> bellman_core::Result<()> {
    for b in [vec![3.0, 1.0], vec![0.2, 0.3]] {
        match construct_c_for_b(&b) {
            Ok(_) => println!("b = {b:?} is admissible"),
            Err(e) => println!("b = {b:?}: {e}"),
        }
    }
    let cases = [
        (vec![0.6, 0.6], ProfileFunction::Gaussian, (0.05, 0.95)),
        (vec![0.3, 0.7], ProfileFunction::Exp, (0.1, 2.0)),
    ];
    for (b, profile, (lo, hi)) in cases {
        let c = construct_c_for_b(&b)?.c;
        let h = PhiComposition::new(b.clone(), profile.clone())?;
        let r = reduced_h_condition(&h, &b, &c, &GridSpec::uniform(2, lo, hi, 21)?, 1e-8, HMode::Equality)?;
        println!("{} b = {b:?}: max |r| = {:.2e} ({:?})", profile.name(), r.max_residual, r.verdict);
    }
    Ok(())
}
