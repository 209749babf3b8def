use crate::catalog::{check_closed_point, check_point, BoxDomain, Candidate};
use crate::error::{Error, Result};
use crate::linalg::SymMatrix;

/// `B(u, v) = u^{1/a} v^{1/b}` on the open positive quadrant.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerProduct {
    a: f64,
    b: f64,
}

impl PowerProduct {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a >= 1.0 && b >= 1.0) {
            return Err(Error::usage(format!("power product needs a, b >= 1, got ({a}, {b})")));
        }
        Ok(Self { a, b })
    }

    pub fn exponents(&self) -> (f64, f64) {
        (self.a, self.b)
    }
}

impl Candidate for PowerProduct {
    fn name(&self) -> String {
        format!("power:a={},b={}", self.a, self.b)
    }

    fn arity(&self) -> usize {
        2
    }

    fn domain(&self) -> BoxDomain {
        BoxDomain::cube(2, 0.0, f64::INFINITY)
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        check_point(self, x)?;
        Ok(x[0].powf(1.0 / self.a) * x[1].powf(1.0 / self.b))
    }

    fn value_closed(&self, x: &[f64]) -> Result<f64> {
        check_closed_point(self, x)?;
        if x.iter().any(|v| v.is_infinite()) {
            return Err(Error::domain(format!("{x:?} has an infinite coordinate")));
        }
        Ok(x[0].powf(1.0 / self.a) * x[1].powf(1.0 / self.b))
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let v = self.value(x)?;
        Ok(vec![v / (self.a * x[0]), v / (self.b * x[1])])
    }

    fn hessian(&self, x: &[f64]) -> Result<SymMatrix> {
        let v = self.value(x)?;
        let (ia, ib) = (1.0 / self.a, 1.0 / self.b);
        let (u, w) = (x[0], x[1]);
        let uu = ia * (ia - 1.0) * v / (u * u);
        let uv = ia * ib * v / (u * w);
        let vv = ib * (ib - 1.0) * v / (w * w);
        SymMatrix::from_rows(&[vec![uu, uv], vec![uv, vv]])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::derivative_mismatch;

    #[test]
    fn unit_exponents_give_product() {
        let b = PowerProduct::new(1.0, 1.0).unwrap();
        assert_eq!(b.value(&[3.0, 4.0]).unwrap(), 12.0);
        let h = b.hessian(&[3.0, 4.0]).unwrap();
        assert_eq!(h.as_matrix().as_slice(), &[0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn one_one_maps_to_one() {
        for (a, b) in [(1.0, 1.0), (2.0, 5.0), (7.5, 1.2)] {
            assert_eq!(PowerProduct::new(a, b).unwrap().value(&[1.0, 1.0]).unwrap(), 1.0);
        }
    }

    #[test]
    fn hessian_at_four_nine() {
        let b = PowerProduct::new(2.0, 2.0).unwrap();
        let (_, h) = derivative_mismatch(&b, &[4.0, 9.0]).unwrap();
        assert!(h < 1e-6);
    }

    #[test]
    fn rejects_small_exponents() {
        assert!(PowerProduct::new(0.5, 2.0).is_err());
        assert!(PowerProduct::new(1.0, 1.0).unwrap().value(&[-1.0, 1.0]).is_err());
    }
}
