use crate::catalog::{check_point, BoxDomain, Candidate};
use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use crate::profile::ProfileFunction;

/// `H(x) = Φ(Σ b_j Φ⁻¹(x_j))` for a profile `(φ, Φ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhiComposition {
    b: Vec<f64>,
    profile: ProfileFunction,
}

struct Pieces {
    y: Vec<f64>,
    s: f64,
}

impl PhiComposition {
    pub fn new(b: Vec<f64>, profile: ProfileFunction) -> Result<Self> {
        if b.is_empty() || b.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::usage(format!("coefficients must be positive, got {b:?}")));
        }
        Ok(Self { b, profile })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.b
    }

    pub fn profile(&self) -> &ProfileFunction {
        &self.profile
    }

    fn pieces(&self, x: &[f64]) -> Result<Pieces> {
        check_point(self, x)?;
        let y = x.iter().map(|&v| self.profile.quantile(v)).collect::<Result<Vec<_>>>()?;
        let s: f64 = self.b.iter().zip(&y).map(|(b, y)| b * y).sum();
        if !self.profile.in_support(s) {
            return Err(Error::domain(format!("combined argument {s} leaves the profile support")));
        }
        Ok(Pieces { y, s })
    }
}

impl Candidate for PhiComposition {
    fn name(&self) -> String {
        let b: Vec<String> = self.b.iter().map(f64::to_string).collect();
        format!("phi:b={},profile={}", b.join(","), self.profile.name())
    }

    fn arity(&self) -> usize {
        self.b.len()
    }

    fn domain(&self) -> BoxDomain {
        let (lo, hi) = self.profile.value_range();
        BoxDomain::cube(self.b.len(), lo, hi)
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        let p = self.pieces(x)?;
        Ok(self.profile.cdf(p.s))
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let p = self.pieces(x)?;
        let ps = self.profile.density(p.s);
        Ok(self
            .b
            .iter()
            .zip(&p.y)
            .map(|(b, &y)| ps * b / self.profile.density(y))
            .collect())
    }

    fn hessian(&self, x: &[f64]) -> Result<SymMatrix> {
        let p = self.pieces(x)?;
        let pr = &self.profile;
        let ps = pr.density(p.s);
        let dps = pr.density_derivative(p.s);
        let dens: Vec<f64> = p.y.iter().map(|&y| pr.density(y)).collect();
        let n = self.b.len();
        Ok(SymMatrix::from_fn(n, |i, j| {
            let mut v = dps * self.b[i] * self.b[j] / (dens[i] * dens[j]);
            if i == j {
                v -= ps * self.b[i] * pr.density_derivative(p.y[i]) / dens[i].powi(3);
            }
            v
        }))
    }
}

/// `B(x_1, …, x_n) = x_n - H(x_1, …, x_{n-1})`.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphCandidate<H> {
    h: H,
    last: (f64, f64),
}

impl<H: Candidate> GraphCandidate<H> {
    pub fn new(h: H, last_lo: f64, last_hi: f64) -> Self {
        Self {
            h,
            last: (last_lo, last_hi),
        }
    }

    pub fn surface(&self) -> &H {
        &self.h
    }
}

/// `u_n - Φ(Σ α_j Φ⁻¹(u_j))`, the last variable ranging over the profile's values.
pub fn ehrhard_b(alphas: Vec<f64>, profile: ProfileFunction) -> Result<GraphCandidate<PhiComposition>> {
    let (lo, hi) = profile.value_range();
    Ok(GraphCandidate::new(PhiComposition::new(alphas, profile)?, lo, hi))
}

impl<H: Candidate> Candidate for GraphCandidate<H> {
    fn name(&self) -> String {
        let inner = self.h.name();
        match inner.strip_prefix("phi:b=") {
            Some(rest) => format!("ehrhard:alpha={rest}"),
            None => format!("graph[{inner}]"),
        }
    }

    fn arity(&self) -> usize {
        self.h.arity() + 1
    }

    fn domain(&self) -> BoxDomain {
        let mut d = self.h.domain();
        d.lo.push(self.last.0);
        d.hi.push(self.last.1);
        d
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        check_point(self, x)?;
        let n = x.len();
        Ok(x[n - 1] - self.h.value(&x[..n - 1])?)
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_point(self, x)?;
        let n = x.len();
        let mut g: Vec<f64> = self.h.gradient(&x[..n - 1])?.into_iter().map(|v| -v).collect();
        g.push(1.0);
        Ok(g)
    }

    fn hessian(&self, x: &[f64]) -> Result<SymMatrix> {
        check_point(self, x)?;
        let n = x.len();
        let hh = self.h.hessian(&x[..n - 1])?;
        Ok(SymMatrix::from_fn(n, |i, j| if i < n - 1 && j < n - 1 { -hh.get(i, j) } else { 0.0 }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::derivative_mismatch;

    #[test]
    fn single_unit_coefficient_is_difference() {
        let b = ehrhard_b(vec![1.0], ProfileFunction::Gaussian).unwrap();
        for (u, v) in [(0.2, 0.9), (0.5, 0.5), (0.73, 0.01)] {
            assert!((b.value(&[u, v]).unwrap() - (v - u)).abs() < 1e-14);
        }
    }

    #[test]
    fn half_half_gives_shift() {
        let b = ehrhard_b(vec![1.0, 1.0], ProfileFunction::Gaussian).unwrap();
        assert!((b.value(&[0.5, 0.5, 0.8]).unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn exp_profile_is_geometric_mean() {
        let h = PhiComposition::new(vec![0.5, 0.5], ProfileFunction::Exp).unwrap();
        for (x, y) in [(0.3, 2.0), (4.0, 9.0), (1e-3, 7.0)] {
            let v = h.value(&[x, y]).unwrap();
            assert!((v - (x * y).sqrt()).abs() <= 1e-12 * v.max(1.0));
        }
        let h = PhiComposition::new(vec![0.3, 0.9, 0.2], ProfileFunction::Exp).unwrap();
        let x = [0.7, 1.9, 3.3];
        let prod = 0.7f64.powf(0.3) * 1.9f64.powf(0.9) * 3.3f64.powf(0.2);
        assert!((h.value(&x).unwrap() - prod).abs() < 1e-12);
    }

    #[test]
    fn gaussian_single_is_identity() {
        let h = PhiComposition::new(vec![1.0], ProfileFunction::Gaussian).unwrap();
        assert!((h.value(&[0.37]).unwrap() - 0.37).abs() < 1e-15);
    }

    #[test]
    fn named_points_match_finite_differences() {
        let b = ehrhard_b(vec![0.7, 0.7], ProfileFunction::Gaussian).unwrap();
        let (g, _) = derivative_mismatch(&b, &[0.3, 0.6, 0.4]).unwrap();
        assert!(g < 1e-6);
        let h = PhiComposition::new(vec![0.6, 0.6], ProfileFunction::Gaussian).unwrap();
        let (g, hh) = derivative_mismatch(&h, &[0.4, 0.7]).unwrap();
        assert!(g < 1e-6 && hh < 1e-6);
    }

    #[test]
    fn domain_errors() {
        let b = ehrhard_b(vec![0.7, 0.7], ProfileFunction::Gaussian).unwrap();
        assert!(matches!(b.value(&[1.3, 0.5, 0.5]), Err(Error::Domain(_))));
        assert!(PhiComposition::new(vec![0.5, -1.0], ProfileFunction::Gaussian).is_err());
    }
}
