//! Profile functions: a positive density `φ`, its primitive `Φ` and `Φ⁻¹`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{norm_cdf, norm_inv, norm_pdf};

/// `log φ` tabulated at knots and interpolated linearly; `Φ` is the exact
/// primitive of the resulting piecewise-exponential density starting at the
/// first knot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabulatedProfile {
    knots: Vec<f64>,
    log_density: Vec<f64>,
    cumulative: Vec<f64>,
}

impl TabulatedProfile {
    pub fn new(knots: Vec<f64>, log_density: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 || knots.len() != log_density.len() {
            return Err(Error::usage("tabulated profile needs at least two knots and matching values"));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::usage("tabulated profile knots must be strictly increasing"));
        }
        if log_density.iter().any(|v| !v.is_finite()) {
            return Err(Error::usage("tabulated log-density values must be finite"));
        }
        let mut cumulative = vec![0.0];
        for i in 0..knots.len() - 1 {
            let seg = segment_mass(log_density[i], slope(&knots, &log_density, i), knots[i + 1] - knots[i]);
            cumulative.push(cumulative[i] + seg);
        }
        Ok(Self {
            knots,
            log_density,
            cumulative,
        })
    }

    fn segment(&self, x: f64) -> usize {
        let n = self.knots.len();
        match self.knots.partition_point(|&k| k <= x) {
            0 => 0,
            i if i >= n => n - 2,
            i => i - 1,
        }
    }

    fn slope(&self, i: usize) -> f64 {
        slope(&self.knots, &self.log_density, i)
    }

    fn total(&self) -> f64 {
        *self.cumulative.last().expect("non-empty")
    }

    fn log_density_at(&self, x: f64) -> f64 {
        let i = self.segment(x);
        self.log_density[i] + self.slope(i) * (x - self.knots[i])
    }

    fn cdf(&self, x: f64) -> f64 {
        let n = self.knots.len();
        if x <= self.knots[0] {
            return 0.0;
        }
        if x >= self.knots[n - 1] {
            return self.total();
        }
        let i = self.segment(x);
        self.cumulative[i] + segment_mass(self.log_density[i], self.slope(i), x - self.knots[i])
    }

    fn quantile(&self, s: f64) -> f64 {
        let i = self.cumulative.partition_point(|&c| c <= s).clamp(1, self.knots.len() - 1) - 1;
        let tau = s - self.cumulative[i];
        let m = self.slope(i);
        let scaled = tau * (-self.log_density[i]).exp();
        let dx = if m.abs() < 1e-14 {
            scaled
        } else {
            (scaled * m).ln_1p() / m
        };
        (self.knots[i] + dx).clamp(self.knots[i], self.knots[i + 1])
    }
}

fn slope(knots: &[f64], vals: &[f64], i: usize) -> f64 {
    (vals[i + 1] - vals[i]) / (knots[i + 1] - knots[i])
}

/// `∫_0^h exp(l + m t) dt`.
fn segment_mass(l: f64, m: f64, h: f64) -> f64 {
    let mh = m * h;
    let factor = if mh.abs() < 1e-12 { 1.0 + 0.5 * mh } else { mh.exp_m1() / mh };
    l.exp() * h * factor
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileFunction {
    /// The standard normal profile.
    Gaussian,
    /// `φ = Φ = exp`, `Φ⁻¹ = log`.
    Exp,
    Tabulated(TabulatedProfile),
}

impl ProfileFunction {
    pub fn name(&self) -> &'static str {
        match self {
            ProfileFunction::Gaussian => "gaussian",
            ProfileFunction::Exp => "exp",
            ProfileFunction::Tabulated(_) => "tabulated",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "gaussian" | "normal" => Ok(ProfileFunction::Gaussian),
            "exp" => Ok(ProfileFunction::Exp),
            other => Err(Error::usage(format!("unknown profile '{other}' (expected gaussian or exp)"))),
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        match self {
            ProfileFunction::Gaussian => norm_pdf(x),
            ProfileFunction::Exp => x.exp(),
            ProfileFunction::Tabulated(t) => t.log_density_at(x).exp(),
        }
    }

    /// `(log φ)'`.
    pub fn log_density_derivative(&self, x: f64) -> f64 {
        match self {
            ProfileFunction::Gaussian => -x,
            ProfileFunction::Exp => 1.0,
            ProfileFunction::Tabulated(t) => t.slope(t.segment(x)),
        }
    }

    /// `φ'`.
    pub fn density_derivative(&self, x: f64) -> f64 {
        self.density(x) * self.log_density_derivative(x)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            ProfileFunction::Gaussian => norm_cdf(x),
            ProfileFunction::Exp => x.exp(),
            ProfileFunction::Tabulated(t) => t.cdf(x),
        }
    }

    pub fn quantile(&self, s: f64) -> Result<f64> {
        let (lo, hi) = self.value_range();
        if !(s > lo && s < hi) {
            return Err(Error::domain(format!(
                "{} profile quantile argument {s} outside ({lo}, {hi})",
                self.name()
            )));
        }
        Ok(match self {
            ProfileFunction::Gaussian => norm_inv(s)?,
            ProfileFunction::Exp => s.ln(),
            ProfileFunction::Tabulated(t) => t.quantile(s),
        })
    }

    /// Open interval of values taken by `Φ`.
    pub fn value_range(&self) -> (f64, f64) {
        match self {
            ProfileFunction::Gaussian => (0.0, 1.0),
            ProfileFunction::Exp => (0.0, f64::INFINITY),
            ProfileFunction::Tabulated(t) => (0.0, t.total()),
        }
    }

    /// Open interval on which `Φ` is strictly increasing.
    pub fn support(&self) -> (f64, f64) {
        match self {
            ProfileFunction::Gaussian | ProfileFunction::Exp => (f64::NEG_INFINITY, f64::INFINITY),
            ProfileFunction::Tabulated(t) => (t.knots[0], *t.knots.last().expect("non-empty")),
        }
    }

    pub(crate) fn in_support(&self, x: f64) -> bool {
        let (lo, hi) = self.support();
        x > lo && x < hi
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tab() -> ProfileFunction {
        let knots: Vec<f64> = (0..=40).map(|i| -4.0 + 0.2 * i as f64).collect();
        let vals = knots.iter().map(|x| -0.5 * x * x).collect();
        ProfileFunction::Tabulated(TabulatedProfile::new(knots, vals).unwrap())
    }

    #[test]
    fn exp_profile_is_log() {
        let p = ProfileFunction::Exp;
        assert_eq!(p.quantile(1.0).unwrap(), 0.0);
        assert!((p.cdf(p.quantile(3.5).unwrap()) - 3.5).abs() < 1e-14);
        assert!(p.quantile(0.0).is_err());
        assert!(p.quantile(-1.0).is_err());
    }

    #[test]
    fn gaussian_profile_range() {
        let p = ProfileFunction::Gaussian;
        assert!(p.quantile(1.0).is_err());
        assert_eq!(p.log_density_derivative(1.5), -1.5);
    }

    #[test]
    fn tabulated_cdf_is_primitive() {
        let p = tab();
        let (a, b) = (-1.3, 0.7);
        let q = crate::quadrature::integrate(|x| p.density(x), a, b, 1e-13, 1e-13);
        assert!((p.cdf(b) - p.cdf(a) - q.value).abs() < 1e-11);
    }

    #[test]
    fn tabulated_rejects_bad_knots() {
        assert!(TabulatedProfile::new(vec![0.0, 0.0], vec![0.0, 0.0]).is_err());
        assert!(TabulatedProfile::new(vec![0.0], vec![0.0]).is_err());
    }

    proptest! {
        #[test]
        fn tabulated_round_trip(f in 0.001..0.999f64) {
            let p = tab();
            let s = f * p.value_range().1;
            let x = p.quantile(s).unwrap();
            prop_assert!((p.cdf(x) - s).abs() <= 1e-10);
        }

        #[test]
        fn gaussian_round_trip(s in 1e-8..(1.0 - 1e-8)) {
            let p = ProfileFunction::Gaussian;
            prop_assert!((p.cdf(p.quantile(s).unwrap()) - s).abs() <= 1e-12);
        }
    }
}
