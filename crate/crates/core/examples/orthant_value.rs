//! Borell's function at the centre of the square against the noise-stability
//! integral of two half-lines.

use bellman_core::catalog::{BorellB, Candidate};
use bellman_core::sets::IntervalSet;
use bellman_core::verify::noise_stability;

fn main() -> bellman_core::Result<()> {
    let p = 0.5;
    let value = BorellB::new(p)?.value(&[0.5, 0.5])?;
    let half = IntervalSet::left_ray(0.0);
    let (integral, err) = noise_stability(p, &half, &half)?;
    println!("B(1/2, 1/2)       = {value:.17}");
    println!("noise stability   = {integral:.17} (error {err:.1e})");
    println!("1/4 + 1/12        = {:.17}", 0.25 + 1.0 / 12.0);
    Ok(())
}
