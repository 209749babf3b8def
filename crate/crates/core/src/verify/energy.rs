//! Energy functionals along the flows and their monotonicity.

use std::sync::Arc;
use std::time::Instant;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::{Candidate, DEFAULT_MARGIN};
use crate::error::{Error, Result};
use crate::flows::{clamped_value, Datum};
use crate::linalg::{psd_sqrt, ColumnSystem, SymMatrix};
use crate::quadrature::GaussHermite;
use crate::report::CheckReport;

use super::gmc::check_data;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum EnergyMeasure {
    /// `∫ B((P_t u_j)(<C^{1/2}a_j, y>)) dγ_k(y)` with the Ornstein–Uhlenbeck
    /// semigroup run at speed `<Ca_j, a_j>`, by a tensor rule of this order.
    Gaussian { order: usize },
    /// `∫_R B(u_j(a_j x, t)) dx` for `k = 1`, by the trapezoid rule.
    Lebesgue { lo: f64, hi: f64, step: f64 },
}

impl EnergyMeasure {
    pub fn tag(&self) -> &'static str {
        match self {
            EnergyMeasure::Gaussian { .. } => "gaussian",
            EnergyMeasure::Lebesgue { .. } => "lebesgue",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyCurve {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub measure: String,
}

impl EnergyCurve {
    /// Largest drop between consecutive samples (zero if nondecreasing).
    pub fn worst_drop(&self) -> f64 {
        self.values.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max)
    }
}

fn energy_at(
    b: &dyn Candidate,
    data: &[Arc<dyn Datum>],
    dirs: &[Vec<f64>],
    speeds: &[f64],
    t: f64,
    measure: EnergyMeasure,
    rule: &GaussHermite,
) -> Result<f64> {
    let n = data.len();
    let mut u = vec![0.0; n];
    match measure {
        EnergyMeasure::Gaussian { order } => {
            let outer = GaussHermite::new(order);
            let (e, v) = ((-t).exp(), -(-2.0 * t).exp_m1());
            let mut err = None;
            let val = outer.expect_nd(dirs[0].len(), |y| {
                for j in 0..n {
                    let proj: f64 = dirs[j].iter().zip(y).map(|(a, y)| a * y).sum();
                    u[j] = data[j].smoothed(e * proj, v * speeds[j], rule);
                }
                match clamped_value(b, &u, DEFAULT_MARGIN) {
                    Ok(r) => r.value,
                    Err(x) => {
                        err.get_or_insert(x);
                        f64::NAN
                    }
                }
            });
            err.map_or(Ok(val), Err)
        }
        EnergyMeasure::Lebesgue { lo, hi, step } => {
            let m = ((hi - lo) / step).round() as usize;
            let mut total = 0.0;
            for i in 0..=m {
                let x = lo + i as f64 * step;
                for j in 0..n {
                    let y = dirs[j][0] * x;
                    u[j] = if t == 0.0 {
                        data[j].value(y)
                    } else {
                        data[j].smoothed(y, 2.0 * t * speeds[j], rule)
                    };
                }
                let w = if i == 0 || i == m { 0.5 } else { 1.0 };
                total += w * clamped_value(b, &u, DEFAULT_MARGIN)?.value;
            }
            Ok(total * step)
        }
    }
}

/// Samples the energy at `times` and checks it never drops by more than
/// `tol`. For the Gaussian measure the report also carries `limit`, the value
/// `B(∫u_j(√s_j z) dγ₁)` approached as `t → ∞`, and `limit_gap` at the last
/// time.
pub fn energy_monotonicity(
    b: &dyn Candidate,
    data: &[Arc<dyn Datum>],
    sys: &ColumnSystem,
    c: &SymMatrix,
    times: &[f64],
    measure: EnergyMeasure,
    tol: f64,
) -> Result<(EnergyCurve, CheckReport)> {
    let start = Instant::now();
    check_data(b, data)?;
    if times.is_empty() || times.windows(2).any(|w| !(w[0] < w[1])) || times[0] < 0.0 {
        return Err(Error::usage("energy times must be non-negative and strictly increasing"));
    }
    let speeds = sys.speeds(c)?;
    if let Some(j) = speeds.iter().position(|s| !(*s > 0.0)) {
        return Err(Error::precondition(format!("<C a_{j}, a_{j}> = {} is not positive", speeds[j])));
    }
    let dirs: Vec<Vec<f64>> = match measure {
        EnergyMeasure::Gaussian { .. } => {
            let root = psd_sqrt(c)?;
            (0..sys.n())
                .map(|j| (root.as_matrix() * DVector::from_column_slice(&sys.column(j))).iter().copied().collect())
                .collect()
        }
        EnergyMeasure::Lebesgue { lo, hi, step } => {
            if sys.k() != 1 {
                return Err(Error::usage("the Lebesgue energy is implemented for k = 1"));
            }
            if !(lo < hi && step > 0.0) {
                return Err(Error::usage("invalid Lebesgue integration window"));
            }
            (0..sys.n()).map(|j| sys.column(j)).collect()
        }
    };
    let rule = GaussHermite::new(crate::flows::DEFAULT_ORDER);
    let values = times
        .par_iter()
        .map(|&t| energy_at(b, data, &dirs, &speeds, t, measure, &rule))
        .collect::<Result<Vec<f64>>>()?;
    let curve = EnergyCurve {
        times: times.to_vec(),
        values,
        measure: measure.tag().to_string(),
    };
    let drop = curve.worst_drop();
    let mut r = CheckReport::scalar(format!("energy-{}[{}]", measure.tag(), b.name()), drop, tol)
        .with_extra("first", curve.values[0])
        .with_extra("last", *curve.values.last().expect("non-empty"));
    r.grid = times.len();
    if let EnergyMeasure::Gaussian { .. } = measure {
        let means: Vec<f64> = data.iter().zip(&speeds).map(|(d, &s)| d.smoothed(0.0, s, &rule)).collect();
        let limit = clamped_value(b, &means, DEFAULT_MARGIN)?.value;
        r = r
            .with_extra("limit", limit)
            .with_extra("limit_gap", (limit - curve.values.last().expect("non-empty")).abs());
    }
    r.settle();
    Ok((curve, r.timed(start)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{BorellB, PMean};
    use crate::flows::{Constant, GaussianBump, MollifiedInterval};
    use crate::verify::gmc::{gmc_sides, GmcOptions};

    fn borell_data() -> Vec<Arc<dyn Datum>> {
        vec![
            Arc::new(GaussianBump::new(0.3, 0.8, 0.6, 0.2).unwrap()),
            Arc::new(MollifiedInterval::with_levels(-0.5, 1.2, 0.5, 0.1, 0.85).unwrap()),
        ]
    }

    #[test]
    fn constants_are_flat() {
        let b = BorellB::new(0.5).unwrap();
        let sys = ColumnSystem::correlated_pair(0.5).unwrap();
        let data: Vec<Arc<dyn Datum>> = vec![Arc::new(Constant(0.4)), Arc::new(Constant(0.7))];
        let (curve, r) =
            energy_monotonicity(&b, &data, &sys, &SymMatrix::identity(2), &[0.0, 0.5, 1.0], EnergyMeasure::Gaussian { order: 8 }, 1e-12)
                .unwrap();
        assert!(r.passed());
        assert!(curve.values.iter().all(|v| (v - curve.values[0]).abs() < 1e-14));
    }

    #[test]
    fn gaussian_energy_runs_between_the_gmc_sides() {
        let p = 0.5;
        let b = BorellB::new(p).unwrap();
        let sys = ColumnSystem::correlated_pair(p).unwrap();
        let c = SymMatrix::identity(2);
        let data = borell_data();
        let times = [0.0, 0.25, 0.5, 1.0, 2.0, 20.0];
        let (curve, r) = energy_monotonicity(&b, &data, &sys, &c, &times, EnergyMeasure::Gaussian { order: 160 }, 1e-7).unwrap();
        assert!(r.passed(), "{r:?}");
        let sides = gmc_sides(&b, &sys, &c, &data, GmcOptions::default()).unwrap();
        assert!((curve.values[0] - sides.integral).abs() < 1e-8, "{curve:?} {sides:?}");
        assert!(r.extra("limit_gap").unwrap() <= 1e-8);
        assert!((r.extra("limit").unwrap() - sides.bound).abs() < 1e-14);
    }

    #[test]
    fn lebesgue_geometric_mean() {
        let b = PMean::new(0.0, 0.5).unwrap();
        let sys = ColumnSystem::from_columns(&[vec![1.0], vec![1.0]]).unwrap();
        let data: Vec<Arc<dyn Datum>> = vec![
            Arc::new(GaussianBump::new(-0.5, 0.6, 1.0, 0.0).unwrap()),
            Arc::new(GaussianBump::new(0.8, 0.9, 2.0, 0.0).unwrap()),
        ];
        let times: Vec<f64> = (0..12).map(|i| 0.1 * i as f64).collect();
        let m = EnergyMeasure::Lebesgue {
            lo: -30.0,
            hi: 30.0,
            step: 0.01,
        };
        let (curve, r) = energy_monotonicity(&b, &data, &sys, &SymMatrix::identity(1), &times, m, 1e-6).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!(curve.values[11] > curve.values[0] + 1e-3);
    }
}
