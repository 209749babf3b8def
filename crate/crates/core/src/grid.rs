//! Tensor grids of evaluation points.

use serde::{Deserialize, Serialize};

use crate::catalog::BoxDomain;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Axis {
    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.count {
            return self.hi;
        }
        self.lo + (self.hi - self.lo) * i as f64 / (self.count - 1) as f64
    }
}

/// A tensor grid; points are enumerated with the first axis varying slowest,
/// which is lexicographic order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    axes: Vec<Axis>,
}

impl GridSpec {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::usage("grid needs at least one axis"));
        }
        for (j, a) in axes.iter().enumerate() {
            if !(a.lo < a.hi) || !a.lo.is_finite() || !a.hi.is_finite() {
                return Err(Error::usage(format!("grid axis {j}: need finite lo < hi, got [{}, {}]", a.lo, a.hi)));
            }
            if a.count < 2 {
                return Err(Error::usage(format!("grid axis {j}: need at least 2 points")));
            }
        }
        Ok(Self { axes })
    }

    pub fn uniform(dim: usize, lo: f64, hi: f64, count: usize) -> Result<Self> {
        Self::new(vec![Axis { lo, hi, count }; dim])
    }

    /// Grid spanning `domain` pulled in by `margin`; every side must be finite
    /// after shrinking.
    pub fn within(domain: &BoxDomain, count: usize, margin: f64) -> Result<Self> {
        let d = domain.shrunk(margin);
        Self::new(
            d.lo.iter()
                .zip(&d.hi)
                .map(|(&lo, &hi)| Axis { lo, hi, count })
                .collect(),
        )
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn size(&self) -> usize {
        self.axes.iter().map(|a| a.count).product()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(self.size());
        let mut idx = vec![0usize; self.dim()];
        loop {
            out.push(idx.iter().zip(&self.axes).map(|(&i, a)| a.point(i)).collect());
            let mut d = self.dim();
            loop {
                if d == 0 {
                    return out;
                }
                d -= 1;
                idx[d] += 1;
                if idx[d] < self.axes[d].count {
                    break;
                }
                idx[d] = 0;
            }
        }
    }

    /// Whether every grid point lies in the open box.
    pub fn interior_to(&self, domain: &BoxDomain) -> bool {
        domain.dim() == self.dim()
            && self
                .axes
                .iter()
                .enumerate()
                .all(|(j, a)| a.lo > domain.lo[j] && a.hi < domain.hi[j])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexicographic_enumeration() {
        let g = GridSpec::uniform(2, 0.0, 1.0, 3).unwrap();
        let p = g.points();
        assert_eq!(p.len(), 9);
        assert_eq!(p[0], vec![0.0, 0.0]);
        assert_eq!(p[1], vec![0.0, 0.5]);
        assert_eq!(p[3], vec![0.5, 0.0]);
        assert_eq!(p[8], vec![1.0, 1.0]);
        assert!(p.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn rejects_degenerate_axes() {
        assert!(GridSpec::uniform(1, 1.0, 1.0, 5).is_err());
        assert!(GridSpec::uniform(1, 0.0, 1.0, 1).is_err());
        assert!(GridSpec::within(&BoxDomain::cube(2, 0.0, f64::INFINITY), 5, 0.1).is_err());
    }

    #[test]
    fn within_stays_interior() {
        let d = BoxDomain::cube(2, 0.0, 1.0);
        let g = GridSpec::within(&d, 21, 0.05).unwrap();
        assert!(g.interior_to(&d));
        assert_eq!(g.axes()[0].point(20), 0.95);
    }
}
