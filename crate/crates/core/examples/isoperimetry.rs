//! Gaussian isoperimetry for half-lines and intervals, and the multiplicative
//! Brunn–Minkowski inequality on the line.

use bellman_core::sets::IntervalSet;
use bellman_core::verify::{brunn_minkowski_check, gaussian_isoperimetry_check};

fn main() -> bellman_core::Result<()> {
    let ts = [0.1, 0.5, 1.0, 2.0];
    let half = gaussian_isoperimetry_check(&IntervalSet::left_ray(0.3), &ts, 1e-9)?;
    println!("half-line: min gap {:.2e}", half.extra("min_gap").unwrap_or(f64::NAN));
    let interval = gaussian_isoperimetry_check(&IntervalSet::interval(-1.0, 1.0)?, &[0.5], 1e-9)?;
    println!("(-1, 1) at t = 0.5: gap {:.4e}", interval.extra("min_gap").unwrap_or(f64::NAN));
    let bm = brunn_minkowski_check(
        &IntervalSet::interval(0.0, 1.0)?,
        &IntervalSet::interval(2.0, 5.0)?,
        &[0.25, 0.5, 0.75],
        1e-3,
        1e-3,
    )?;
    println!("Brunn–Minkowski: worst shortfall {:.4e}, grid error {:.1e}", bm.max_residual, bm.extra("exact_gap").unwrap_or(f64::NAN));
    Ok(())
}
