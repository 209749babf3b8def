//! Candidate Bellman functions `B` and surface functions `H`.
//!
//! Every candidate exposes its value, gradient and Hessian in closed form;
//! [`fd_gradient`] and [`fd_hessian`] provide central-difference versions
//! used to cross-check them.

mod borell;
mod phi;
mod pmean;
mod power;

use std::fmt::Debug;
use std::sync::Arc;

pub use borell::BorellB;
pub use phi::{ehrhard_b, GraphCandidate, PhiComposition};
pub use pmean::PMean;
pub use power::PowerProduct;

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use crate::profile::ProfileFunction;

/// Default distance kept from the boundary of a candidate's domain.
pub const DEFAULT_MARGIN: f64 = 1e-3;

/// An axis-aligned open box; bounds may be infinite.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len(), "box bounds must have equal length");
        Self { lo, hi }
    }

    pub fn cube(dim: usize, lo: f64, hi: f64) -> Self {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (l, h))| v > l && v < h)
    }

    /// The box pulled in by `delta` on every finite side.
    pub fn shrunk(&self, delta: f64) -> Self {
        let lo = self.lo.iter().map(|l| if l.is_finite() { l + delta } else { *l }).collect();
        let hi = self.hi.iter().map(|h| if h.is_finite() { h - delta } else { *h }).collect();
        Self::new(lo, hi)
    }

    /// Clamps `v` into axis `j`; returns whether it moved.
    pub fn clamp_axis(&self, j: usize, v: f64) -> (f64, bool) {
        let c = v.clamp(self.lo[j], self.hi[j]);
        (c, c != v)
    }
}

/// A function on a box with analytic first and second derivatives.
pub trait Candidate: Send + Sync + Debug {
    /// Catalog identifier, e.g. `borell:p=0.5`.
    fn name(&self) -> String;
    fn arity(&self) -> usize;
    fn domain(&self) -> BoxDomain;
    fn value(&self, x: &[f64]) -> Result<f64>;
    /// Continuous extension of the value to the closed box, where one exists.
    fn value_closed(&self, x: &[f64]) -> Result<f64> {
        self.value(x)
    }
    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>>;
    fn hessian(&self, x: &[f64]) -> Result<SymMatrix>;
}

/// Like [`check_point`] but accepts points on the boundary of the box.
pub(crate) fn check_closed_point(c: &dyn Candidate, x: &[f64]) -> Result<()> {
    let d = c.domain();
    if x.len() != c.arity() {
        return Err(Error::usage(format!("{} takes {} arguments, got {}", c.name(), c.arity(), x.len())));
    }
    if x.iter().zip(d.lo.iter().zip(&d.hi)).any(|(v, (l, h))| !(v >= l && v <= h)) {
        return Err(Error::domain(format!("{:?} is outside the closed domain of {}", x, c.name())));
    }
    Ok(())
}

pub(crate) fn check_point(c: &dyn Candidate, x: &[f64]) -> Result<()> {
    if x.len() != c.arity() {
        return Err(Error::usage(format!(
            "{} takes {} arguments, got {}",
            c.name(),
            c.arity(),
            x.len()
        )));
    }
    if !c.domain().contains(x) {
        return Err(Error::domain(format!("{:?} is outside the domain of {}", x, c.name())));
    }
    Ok(())
}

fn fd_step(x: f64) -> f64 {
    1e-4 * (1.0 + x.abs())
}

/// Central-difference gradient with step `1e-4 (1 + |x_j|)`.
pub fn fd_gradient(c: &dyn Candidate, x: &[f64]) -> Result<Vec<f64>> {
    let mut pt = x.to_vec();
    (0..x.len())
        .map(|j| {
            let h = fd_step(x[j]);
            pt[j] = x[j] + h;
            let fp = c.value(&pt)?;
            pt[j] = x[j] - h;
            let fm = c.value(&pt)?;
            pt[j] = x[j];
            Ok((fp - fm) / (2.0 * h))
        })
        .collect()
}

/// Central-difference Hessian: three-point rule on the diagonal, four
/// corner points for mixed entries.
pub fn fd_hessian(c: &dyn Candidate, x: &[f64]) -> Result<SymMatrix> {
    let n = x.len();
    let f0 = c.value(x)?;
    let mut pt = x.to_vec();
    let mut at = |d: &[(usize, f64)]| -> Result<f64> {
        for &(j, s) in d {
            pt[j] = x[j] + s;
        }
        let v = c.value(&pt);
        for &(j, _) in d {
            pt[j] = x[j];
        }
        v
    };
    let mut h = vec![vec![0.0; n]; n];
    for i in 0..n {
        let hi = fd_step(x[i]);
        h[i][i] = (at(&[(i, hi)])? - 2.0 * f0 + at(&[(i, -hi)])?) / (hi * hi);
        for j in (i + 1)..n {
            let hj = fd_step(x[j]);
            let v = (at(&[(i, hi), (j, hj)])? - at(&[(i, hi), (j, -hj)])? - at(&[(i, -hi), (j, hj)])?
                + at(&[(i, -hi), (j, -hj)])?)
                / (4.0 * hi * hj);
            h[i][j] = v;
            h[j][i] = v;
        }
    }
    SymMatrix::from_rows(&h)
}

/// Largest relative mismatch between analytic and finite-difference
/// derivatives at `x`: `(gradient, hessian)`, each scaled by
/// `max(1, max |analytic entry|)`.
pub fn derivative_mismatch(c: &dyn Candidate, x: &[f64]) -> Result<(f64, f64)> {
    let g = c.gradient(x)?;
    let gf = fd_gradient(c, x)?;
    let gscale = g.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let gerr = g.iter().zip(&gf).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())) / gscale;
    let h = c.hessian(x)?;
    let hf = fd_hessian(c, x)?;
    let hscale = h.max_abs_entry().max(1.0);
    let herr = (h.as_matrix() - hf.as_matrix()).amax() / hscale;
    Ok((gerr, herr))
}

/// Parses `name:key=value,...` into a catalog entry.
///
/// Vector-valued parameters continue across commas until the next `key=`:
/// `ehrhard:alpha=0.6,0.6,profile=gaussian`.
pub fn parse_candidate(spec: &str) -> Result<Arc<dyn Candidate>> {
    let (name, params) = parse_spec(spec)?;
    let get = |key: &str| -> Result<&Vec<f64>> {
        params
            .iter()
            .find(|(k, _)| k == key)
            .and_then(|(_, v)| v.as_ref().ok())
            .ok_or_else(|| Error::usage(format!("candidate '{name}' needs numeric parameter '{key}'")))
    };
    let scalar = |key: &str| -> Result<f64> {
        let v = get(key)?;
        if v.len() != 1 {
            return Err(Error::usage(format!("parameter '{key}' must be a single number")));
        }
        Ok(v[0])
    };
    let profile = || -> Result<ProfileFunction> {
        match params.iter().find(|(k, _)| k == "profile") {
            None => Ok(ProfileFunction::Gaussian),
            Some((_, Err(s))) => ProfileFunction::parse(s),
            Some((_, Ok(_))) => Err(Error::usage("profile must be a name")),
        }
    };
    let allowed: &[&str] = match name.as_str() {
        "borell" => &["p"],
        "power" => &["a", "b"],
        "ehrhard" => &["alpha", "profile"],
        "phi" => &["b", "profile"],
        "pmean" => &["p", "lambda"],
        other => return Err(Error::usage(format!("unknown candidate '{other}'"))),
    };
    if let Some((k, _)) = params.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
        return Err(Error::usage(format!("candidate '{name}' has no parameter '{k}'")));
    }
    Ok(match name.as_str() {
        "borell" => Arc::new(BorellB::new(scalar("p")?)?),
        "power" => Arc::new(PowerProduct::new(scalar("a")?, scalar("b")?)?),
        "ehrhard" => Arc::new(ehrhard_b(get("alpha")?.clone(), profile()?)?),
        "phi" => Arc::new(PhiComposition::new(get("b")?.clone(), profile()?)?),
        "pmean" => Arc::new(PMean::new(scalar("p")?, scalar("lambda")?)?),
        _ => unreachable!("checked above"),
    })
}

type SpecParams = Vec<(String, std::result::Result<Vec<f64>, String>)>;

/// Splits `name:k=v,...`; numeric lists become `Ok`, anything else `Err(text)`.
pub(crate) fn parse_spec(spec: &str) -> Result<(String, SpecParams)> {
    let spec = spec.trim();
    let (name, rest) = match spec.split_once(':') {
        Some((n, r)) => (n.trim(), r),
        None => (spec, ""),
    };
    if name.is_empty() {
        return Err(Error::usage("empty catalog name"));
    }
    let mut raw: Vec<(String, String)> = Vec::new();
    for tok in rest.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        match tok.split_once('=') {
            Some((k, v)) => raw.push((k.trim().to_string(), v.trim().to_string())),
            None => match raw.last_mut() {
                Some((_, v)) => {
                    v.push(',');
                    v.push_str(tok);
                }
                None => return Err(Error::usage(format!("expected key=value in '{spec}', found '{tok}'"))),
            },
        }
    }
    let params = raw
        .into_iter()
        .map(|(k, v)| {
            let nums: std::result::Result<Vec<f64>, _> = v.split(',').map(|s| s.trim().parse::<f64>()).collect();
            (k, nums.map_err(|_| v))
        })
        .collect();
    Ok((name.to_string(), params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_interior(rng: &mut ChaCha8Rng, d: &BoxDomain, lo_cap: f64, hi_cap: f64) -> Vec<f64> {
        (0..d.dim())
            .map(|j| {
                let lo = d.lo[j].max(lo_cap);
                let hi = d.hi[j].min(hi_cap);
                rng.random_range(lo..hi)
            })
            .collect()
    }

    fn check_all(c: &dyn Candidate, lo_cap: f64, hi_cap: f64, count: usize, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = c.domain().shrunk(0.05);
        for _ in 0..count {
            let x = random_interior(&mut rng, &d, lo_cap, hi_cap);
            let (g, h) = derivative_mismatch(c, &x).unwrap();
            assert!(g <= 1e-5, "{} gradient mismatch {g} at {x:?}", c.name());
            assert!(h <= 1e-5, "{} hessian mismatch {h} at {x:?}", c.name());
        }
    }

    #[test]
    fn every_catalog_entry_matches_finite_differences() {
        let entries: Vec<Arc<dyn Candidate>> = vec![
            parse_candidate("borell:p=0.5").unwrap(),
            parse_candidate("borell:p=0.1").unwrap(),
            parse_candidate("power:a=2,b=3").unwrap(),
            parse_candidate("ehrhard:alpha=0.7,0.7").unwrap(),
            parse_candidate("phi:b=0.6,0.6").unwrap(),
            parse_candidate("phi:b=0.5,0.5,profile=exp").unwrap(),
            parse_candidate("pmean:p=2,lambda=0.3").unwrap(),
            parse_candidate("pmean:p=0,lambda=0.4").unwrap(),
            parse_candidate("pmean:p=-1.5,lambda=0.6").unwrap(),
        ];
        for (i, c) in entries.iter().enumerate() {
            check_all(c.as_ref(), 0.05, 4.0, 200, i as u64);
        }
    }

    #[test]
    fn parser_handles_lists_and_errors() {
        let c = parse_candidate("borell:p=0.5").unwrap();
        assert_eq!(c.name(), "borell:p=0.5");
        assert_eq!(parse_candidate("ehrhard:alpha=0.6,0.6,profile=gaussian").unwrap().arity(), 3);
        assert!(parse_candidate("nosuch:p=1").is_err());
        assert!(parse_candidate("borell:q=0.5").is_err());
        assert!(parse_candidate("borell").is_err());
        assert!(parse_candidate("borell:p=1.5").is_err());
    }

    #[test]
    fn box_shrinking_keeps_infinite_sides() {
        let b = BoxDomain::new(vec![0.0, f64::NEG_INFINITY], vec![1.0, f64::INFINITY]).shrunk(0.1);
        assert_eq!(b.lo, vec![0.1, f64::NEG_INFINITY]);
        assert_eq!(b.hi, vec![0.9, f64::INFINITY]);
        assert!(!b.contains(&[0.05, 0.0]));
    }
}
