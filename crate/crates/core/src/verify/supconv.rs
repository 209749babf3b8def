//! Grid sup-convolution `h(z) = sup{Φ(b₁Φ⁻¹(f₁(x₁)) + b₂Φ⁻¹(f₂(x₂))) : b₁x₁ + b₂x₂ = z}`.
//!
//! The grids are aligned so that `b_j x_j` are integer multiples of `delta`;
//! every decomposition of a knot `z_m = m·delta` on the grid is then visited
//! exactly, and the result is a max-plus convolution.

use crate::error::{Error, Result};
use crate::flows::{Datum, PiecewiseLinear, Smoothness};
use crate::profile::ProfileFunction;

/// How much to add on top of the neighbour maximum at each knot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Lift {
    /// The largest jump between neighbouring raw knot values.
    MaxJump,
    Fixed(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SupConvolution {
    pub delta: f64,
    pub knots: Vec<f64>,
    /// `h` at the knots.
    pub raw: Vec<f64>,
    /// Neighbour maximum of `raw` plus `eps_h`.
    pub majorant: Vec<f64>,
    pub eps_h: f64,
}

impl SupConvolution {
    /// The majorant as a piecewise-linear datum with constant tails.
    pub fn datum(&self) -> Result<PiecewiseLinear> {
        PiecewiseLinear::new(self.knots.clone(), self.majorant.clone())
    }
}

/// `Φ⁻¹` extended by `∓∞` at the ends of the profile's range.
pub(crate) fn extended_quantile(profile: &ProfileFunction, s: f64) -> Result<f64> {
    let (lo, hi) = profile.value_range();
    if s.is_nan() {
        return Err(Error::domain("NaN passed to a profile quantile"));
    }
    if s <= lo {
        Ok(f64::NEG_INFINITY)
    } else if s >= hi {
        Ok(f64::INFINITY)
    } else {
        profile.quantile(s)
    }
}

/// Exponents `b_j` times `Φ⁻¹(f_j)` sampled on the aligned grid.
///
/// Data that are not indicators reach the ends of the profile range only by
/// rounding, so their quantiles are held at the last finite values.
fn sample(profile: &ProfileFunction, b: f64, f: &dyn Datum, delta: f64, radius: f64) -> Result<(i64, Vec<f64>)> {
    let n = (radius * b / delta).ceil() as i64;
    let (lo, hi) = profile.value_range();
    let exact = f.smoothness() == Smoothness::Indicator;
    let floor = profile.quantile(f64::MIN_POSITIVE.max(lo.next_up()))?;
    let ceil = if hi.is_finite() { Some(profile.quantile(hi.next_down())?) } else { None };
    let vals = (-n..=n)
        .map(|i| {
            let x = i as f64 * delta / b;
            let v = f.value(x);
            let q = match (exact, ceil) {
                (false, _) if v <= lo => floor,
                (false, Some(c)) if v >= hi => c,
                _ => extended_quantile(profile, v)?,
            };
            Ok(b * q)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((n, vals))
}

/// Sup-convolution of two data over `|x_j| ≤ radius`.
pub fn sup_convolution(
    profile: &ProfileFunction,
    b: [f64; 2],
    f: [&dyn Datum; 2],
    delta: f64,
    radius: f64,
    lift: Lift,
) -> Result<SupConvolution> {
    if !(b[0] > 0.0 && b[1] > 0.0) {
        return Err(Error::usage(format!("sup-convolution needs positive coefficients, got {b:?}")));
    }
    if !(delta > 0.0 && radius > 0.0) {
        return Err(Error::usage("sup-convolution needs positive grid step and radius"));
    }
    let (n1, t1) = sample(profile, b[0], f[0], delta, radius)?;
    let (n2, t2) = sample(profile, b[1], f[1], delta, radius)?;
    let mut best = vec![f64::NEG_INFINITY; t1.len() + t2.len() - 1];
    for (i, &a) in t1.iter().enumerate() {
        if a == f64::NEG_INFINITY {
            continue;
        }
        for (j, &c) in t2.iter().enumerate() {
            let s = a + c;
            if s > best[i + j] {
                best[i + j] = s;
            }
        }
    }
    let m0 = -(n1 + n2);
    let knots: Vec<f64> = (0..best.len()).map(|m| (m0 + m as i64) as f64 * delta).collect();
    let raw: Vec<f64> = best.iter().map(|&s| profile.cdf(s)).collect();
    let eps_h = match lift {
        Lift::MaxJump => raw.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max),
        Lift::Fixed(e) => e,
    };
    let last = raw.len() - 1;
    let majorant = (0..raw.len())
        .map(|m| raw[m.saturating_sub(1)].max(raw[m]).max(raw[(m + 1).min(last)]) + eps_h)
        .collect();
    Ok(SupConvolution {
        delta,
        knots,
        raw,
        majorant,
        eps_h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::{Constant, MollifiedInterval};

    #[test]
    fn rays_give_a_ray() {
        let f1 = MollifiedInterval::ray(0.4, 0.0).unwrap();
        let f2 = MollifiedInterval::ray(-0.2, 0.0).unwrap();
        let s = sup_convolution(&ProfileFunction::Gaussian, [0.5, 0.5], [&f1, &f2], 0.01, 6.0, Lift::Fixed(0.0)).unwrap();
        for (z, h) in s.knots.iter().zip(&s.raw) {
            if *z < 0.1 - 0.02 {
                assert_eq!(*h, 1.0, "z = {z}");
            } else if *z > 0.1 + 0.02 {
                assert_eq!(*h, 0.0, "z = {z}");
            }
        }
    }

    #[test]
    fn constants_and_lift() {
        let c = Constant(0.3);
        let s = sup_convolution(&ProfileFunction::Gaussian, [0.6, 0.6], [&c, &c], 0.05, 2.0, Lift::MaxJump).unwrap();
        let want = crate::special::norm_cdf(1.2 * crate::special::norm_inv(0.3).unwrap());
        assert!(s.raw.iter().all(|h| (h - want).abs() < 1e-12));
        assert_eq!(s.eps_h, 0.0);
        assert!(s.datum().is_ok());
    }

    #[test]
    fn majorant_dominates_off_grid() {
        let f1 = crate::flows::GaussianBump::new(0.3, 1.0, 0.6, 0.2).unwrap();
        let f2 = crate::flows::GaussianBump::new(-0.5, 0.7, 0.5, 0.3).unwrap();
        let p = ProfileFunction::Gaussian;
        let s = sup_convolution(&p, [0.7, 0.6], [&f1, &f2], 0.01, 8.0, Lift::MaxJump).unwrap();
        let h = s.datum().unwrap();
        for k in 0..200 {
            let x1 = -3.0 + 0.0317 * k as f64;
            for l in 0..50 {
                let x2 = -3.0 + 0.1231 * l as f64;
                let target = p.cdf(0.7 * p.quantile(f1.value(x1)).unwrap() + 0.6 * p.quantile(f2.value(x2)).unwrap());
                assert!(h.value(0.7 * x1 + 0.6 * x2) >= target - 1e-12);
            }
        }
    }
}
