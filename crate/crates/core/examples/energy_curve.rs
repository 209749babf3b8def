//! Gaussian energy of the Borell instance along the Ornstein–Uhlenbeck flow.

use std::sync::Arc;

use bellman_core::catalog::BorellB;
use bellman_core::flows::{Datum, GaussianBump, MollifiedInterval};
use bellman_core::verify::{energy_monotonicity, EnergyMeasure};
use bellman_core::{ColumnSystem, SymMatrix};

fn main() -> bellman_core::Result<()> {
    let p = 0.5;
    let data: Vec<Arc<dyn Datum>> = vec![
        Arc::new(GaussianBump::new(0.3, 0.8, 0.6, 0.2)?),
        Arc::new(MollifiedInterval::with_levels(-0.5, 1.2, 0.5, 0.1, 0.85)?),
    ];
    let times: Vec<f64> = (0..10).map(|i| 0.5 * i as f64).chain([20.0]).collect();
    let (curve, r) = energy_monotonicity(
        &BorellB::new(p)?,
        &data,
        &ColumnSystem::correlated_pair(p)?,
        &SymMatrix::identity(2),
        &times,
        EnergyMeasure::Gaussian { order: 96 },
        1e-7,
    )?;
    println!("t,E");
    for (t, e) in curve.times.iter().zip(&curve.values) {
        println!("{t},{e:.15}");
    }
    println!("limit {:.15}, gap {:.2e}, {:?}", r.extra("limit").unwrap_or(f64::NAN), r.extra("limit_gap").unwrap_or(f64::NAN), r.verdict);
    Ok(())
}
