//! Finite unions of intervals on the line.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::norm_cdf;

/// A finite union of open intervals, kept sorted and merged. Endpoints may
/// be infinite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalSet {
    parts: Vec<(f64, f64)>,
}

impl IntervalSet {
    pub fn new(parts: Vec<(f64, f64)>) -> Result<Self> {
        if parts.iter().any(|(a, b)| a.is_nan() || b.is_nan() || a > b) {
            return Err(Error::usage(format!("invalid interval list {parts:?}")));
        }
        let mut parts: Vec<(f64, f64)> = parts.into_iter().filter(|(a, b)| a < b).collect();
        parts.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(parts.len());
        for (a, b) in parts {
            match merged.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }
        Ok(Self { parts: merged })
    }

    pub fn interval(a: f64, b: f64) -> Result<Self> {
        Self::new(vec![(a, b)])
    }

    /// `(-∞, a)`.
    pub fn left_ray(a: f64) -> Self {
        Self {
            parts: vec![(f64::NEG_INFINITY, a)],
        }
    }

    pub fn real_line() -> Self {
        Self {
            parts: vec![(f64::NEG_INFINITY, f64::INFINITY)],
        }
    }

    pub fn parts(&self) -> &[(f64, f64)] {
        &self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.parts.iter().any(|&(a, b)| x > a && x < b)
    }

    pub fn gaussian_measure(&self) -> f64 {
        self.parts.iter().map(|&(a, b)| gaussian_interval(a, b)).sum()
    }

    pub fn lebesgue_measure(&self) -> f64 {
        self.parts.iter().map(|&(a, b)| b - a).sum()
    }

    /// `A + [-t, t]`.
    pub fn dilate(&self, t: f64) -> Result<Self> {
        if !(t >= 0.0) {
            return Err(Error::usage(format!("dilation radius must be non-negative, got {t}")));
        }
        Self::new(self.parts.iter().map(|&(a, b)| (a - t, b + t)).collect())
    }

    /// `λA` for `λ > 0`.
    pub fn scale(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::usage(format!("scale must be positive, got {lambda}")));
        }
        Self::new(self.parts.iter().map(|&(a, b)| (lambda * a, lambda * b)).collect())
    }

    /// `A + B`.
    pub fn minkowski_sum(&self, other: &IntervalSet) -> Result<Self> {
        let mut out = Vec::with_capacity(self.parts.len() * other.parts.len());
        for &(a, b) in &self.parts {
            for &(c, d) in &other.parts {
                out.push((a + c, b + d));
            }
        }
        Self::new(out)
    }
}

/// `γ₁((a, b))`, computed on the side of zero that avoids cancellation.
pub fn gaussian_interval(a: f64, b: f64) -> f64 {
    if a >= 0.0 {
        norm_cdf(-a) - norm_cdf(-b)
    } else {
        norm_cdf(b) - norm_cdf(a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merging() {
        let s = IntervalSet::new(vec![(2.0, 3.0), (0.0, 1.0), (0.5, 2.0), (5.0, 5.0)]).unwrap();
        assert_eq!(s.parts(), &[(0.0, 3.0)]);
        assert!(IntervalSet::new(vec![(1.0, 0.0)]).is_err());
    }

    #[test]
    fn measures() {
        assert!((IntervalSet::left_ray(0.0).gaussian_measure() - 0.5).abs() < 1e-16);
        assert!((IntervalSet::real_line().gaussian_measure() - 1.0).abs() < 1e-16);
        let s = IntervalSet::new(vec![(0.0, 1.0), (2.0, 4.0)]).unwrap();
        assert_eq!(s.lebesgue_measure(), 3.0);
    }

    #[test]
    fn minkowski_and_dilation() {
        let a = IntervalSet::new(vec![(0.0, 1.0), (3.0, 4.0)]).unwrap();
        let b = IntervalSet::interval(0.0, 0.5).unwrap();
        assert_eq!(a.minkowski_sum(&b).unwrap().parts(), &[(0.0, 1.5), (3.0, 4.5)]);
        assert_eq!(a.dilate(1.0).unwrap().parts(), &[(-1.0, 5.0)]);
        assert_eq!(a.scale(2.0).unwrap().parts(), &[(0.0, 2.0), (6.0, 8.0)]);
    }
}
