use crate::catalog::{check_point, BoxDomain, Candidate};
use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use crate::quadrature::integrate;
use crate::special::{norm_cdf, norm_inv_unchecked, norm_pdf};

/// Noise-stability function for correlation `p`:
/// the `γ₂` measure of `{x < Φ⁻¹(u), p x + √(1-p²) y < Φ⁻¹(v)}`.
#[derive(Clone, Debug, PartialEq)]
pub struct BorellB {
    p: f64,
    s: f64,
}

impl BorellB {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::usage(format!("correlation p must lie in (0, 1), got {p}")));
        }
        Ok(Self {
            p,
            s: (1.0 - p * p).sqrt(),
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Value on the closed square; the edges follow `B(0,v) = B(u,0) = 0`,
    /// `B(1,v) = v`, `B(u,1) = u`.
    pub fn value_closed(&self, u: f64, v: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) || !(0.0..=1.0).contains(&v) {
            return Err(Error::domain(format!("({u}, {v}) lies outside [0, 1]²")));
        }
        if u == 0.0 || v == 0.0 {
            return Ok(0.0);
        }
        if u == 1.0 {
            return Ok(v);
        }
        if v == 1.0 {
            return Ok(u);
        }
        let a = norm_inv_unchecked(u);
        let b = norm_inv_unchecked(v);
        let (p, s) = (self.p, self.s);
        let r = integrate(
            |x| norm_cdf((b - p * x) / s) * norm_pdf(x),
            f64::NEG_INFINITY,
            a,
            1e-16,
            1e-14,
        );
        Ok(r.value)
    }

    fn pieces(&self, x: &[f64]) -> Result<(f64, f64, f64, f64)> {
        check_point(self, x)?;
        let a = norm_inv_unchecked(x[0]);
        let b = norm_inv_unchecked(x[1]);
        let w1 = (b - self.p * a) / self.s;
        let w2 = (a - self.p * b) / self.s;
        Ok((a, b, w1, w2))
    }
}

impl Candidate for BorellB {
    fn name(&self) -> String {
        format!("borell:p={}", self.p)
    }

    fn arity(&self) -> usize {
        2
    }

    fn domain(&self) -> BoxDomain {
        BoxDomain::cube(2, 0.0, 1.0)
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        if x.len() != 2 {
            return Err(Error::usage("borell takes two arguments"));
        }
        self.value_closed(x[0], x[1])
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (_, _, w1, w2) = self.pieces(x)?;
        Ok(vec![norm_cdf(w1), norm_cdf(w2)])
    }

    fn hessian(&self, x: &[f64]) -> Result<SymMatrix> {
        let (a, b, w1, w2) = self.pieces(x)?;
        let (p, s) = (self.p, self.s);
        let uu = -p * norm_pdf(w1) / (s * norm_pdf(a));
        let uv = norm_pdf(w1) / (s * norm_pdf(b));
        let vv = -p * norm_pdf(w2) / (s * norm_pdf(b));
        SymMatrix::from_rows(&[vec![uu, uv], vec![uv, vv]])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_correlation_factorizes() {
        let b = BorellB::new(1e-9).unwrap();
        for (u, v) in [(0.2, 0.7), (0.5, 0.5), (0.9, 0.1)] {
            assert!((b.value(&[u, v]).unwrap() - u * v).abs() < 1e-8);
        }
    }

    #[test]
    fn boundary_traces() {
        let b = BorellB::new(0.4).unwrap();
        assert!(b.value(&[1e-12, 0.3]).unwrap() < 1e-11);
        assert!((b.value(&[1.0 - 1e-12, 0.3]).unwrap() - 0.3).abs() < 1e-11);
        assert_eq!(b.value(&[0.0, 0.3]).unwrap(), 0.0);
        assert_eq!(b.value(&[1.0, 0.3]).unwrap(), 0.3);
        assert!(b.value(&[1.2, 0.3]).is_err());
        assert!(b.gradient(&[0.0, 0.3]).is_err());
    }

    #[test]
    fn orthant_value() {
        let b = BorellB::new(0.5).unwrap();
        let v = b.value(&[0.5, 0.5]).unwrap();
        assert!((v - (0.25 + 1.0 / 12.0)).abs() < 1e-12);
    }

    #[test]
    fn saturation_and_signs() {
        for p in [0.1, 0.5, 0.9] {
            let b = BorellB::new(p).unwrap();
            for i in 1..20 {
                for j in 1..20 {
                    let h = b.hessian(&[i as f64 / 20.0, j as f64 / 20.0]).unwrap();
                    let det = h.get(0, 0) * h.get(1, 1) - p * p * h.get(0, 1).powi(2);
                    let scale = 1.0 + h.max_abs_entry().powi(2);
                    assert!(det.abs() / scale < 1e-12);
                    assert!(h.get(0, 0) <= 0.0 && h.get(1, 1) <= 0.0);
                }
            }
        }
    }
}
