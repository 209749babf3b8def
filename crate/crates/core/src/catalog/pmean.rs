use crate::catalog::{check_closed_point, check_point, BoxDomain, Candidate};
use crate::error::{Error, Result};
use crate::linalg::SymMatrix;

/// Weighted power mean `(λx^p + (1-λ)y^p)^{1/p}`; `p = 0` is `x^λ y^{1-λ}`.
#[derive(Clone, Debug, PartialEq)]
pub struct PMean {
    p: f64,
    lambda: f64,
}

impl PMean {
    pub fn new(p: f64, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) || !p.is_finite() {
            return Err(Error::usage(format!("power mean needs finite p and lambda in (0, 1), got p={p}, lambda={lambda}")));
        }
        Ok(Self { p, lambda })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl Candidate for PMean {
    fn name(&self) -> String {
        format!("pmean:p={},lambda={}", self.p, self.lambda)
    }

    fn arity(&self) -> usize {
        2
    }

    fn domain(&self) -> BoxDomain {
        BoxDomain::cube(2, 0.0, f64::INFINITY)
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        check_point(self, x)?;
        let (l, p) = (self.lambda, self.p);
        if p == 0.0 {
            return Ok(x[0].powf(l) * x[1].powf(1.0 - l));
        }
        Ok((l * x[0].powf(p) + (1.0 - l) * x[1].powf(p)).powf(1.0 / p))
    }

    fn value_closed(&self, x: &[f64]) -> Result<f64> {
        check_closed_point(self, x)?;
        if x[0] > 0.0 && x[1] > 0.0 {
            return self.value(x);
        }
        if self.p <= 0.0 {
            return Ok(0.0);
        }
        let (l, p) = (self.lambda, self.p);
        Ok((l * x[0].powf(p) + (1.0 - l) * x[1].powf(p)).powf(1.0 / p))
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let h = self.value(x)?;
        let (l, p) = (self.lambda, self.p);
        let (a, b) = (x[0], x[1]);
        if p == 0.0 {
            return Ok(vec![l * h / a, (1.0 - l) * h / b]);
        }
        let s = l * a.powf(p) + (1.0 - l) * b.powf(p);
        let f = s.powf(1.0 / p - 1.0);
        Ok(vec![l * a.powf(p - 1.0) * f, (1.0 - l) * b.powf(p - 1.0) * f])
    }

    fn hessian(&self, x: &[f64]) -> Result<SymMatrix> {
        let h = self.value(x)?;
        let (l, p) = (self.lambda, self.p);
        let (a, b) = (x[0], x[1]);
        let (xx, xy, yy) = if p == 0.0 {
            (
                l * (l - 1.0) * h / (a * a),
                l * (1.0 - l) * h / (a * b),
                -l * (1.0 - l) * h / (b * b),
            )
        } else {
            let s = l * a.powf(p) + (1.0 - l) * b.powf(p);
            let f = l * (1.0 - l) * s.powf(1.0 / p - 2.0);
            (
                (p - 1.0) * f * a.powf(p - 2.0) * b.powf(p),
                (1.0 - p) * f * a.powf(p - 1.0) * b.powf(p - 1.0),
                (p - 1.0) * f * a.powf(p) * b.powf(p - 2.0),
            )
        };
        SymMatrix::from_rows(&[vec![xx, xy], vec![xy, yy]])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_is_fixed() {
        for p in [-2.0, 0.0, 0.5, 1.0, 3.0] {
            let m = PMean::new(p, 0.3).unwrap();
            assert!((m.value(&[2.5, 2.5]).unwrap() - 2.5).abs() < 1e-14);
        }
    }

    #[test]
    fn p_one_is_arithmetic() {
        let m = PMean::new(1.0, 0.3).unwrap();
        assert!((m.value(&[2.0, 5.0]).unwrap() - (0.6 + 3.5)).abs() < 1e-14);
    }

    #[test]
    fn monotone_in_p_on_grid() {
        // M_p >= M_{p/(np+1)} with p = 2, n = 1.
        let hi = PMean::new(2.0, 0.35).unwrap();
        let lo = PMean::new(2.0 / 3.0, 0.35).unwrap();
        for i in 1..=20 {
            for j in 1..=20 {
                let x = [0.25 * i as f64, 0.25 * j as f64];
                assert!(hi.value(&x).unwrap() >= lo.value(&x).unwrap() - 1e-14);
            }
        }
    }

    #[test]
    fn rejects_nonpositive_arguments() {
        let m = PMean::new(2.0, 0.5).unwrap();
        assert!(matches!(m.value(&[0.0, 1.0]), Err(Error::Domain(_))));
    }
}
