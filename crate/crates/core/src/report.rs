//! Check reports and the deterministic parallel grid sweep that fills them.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn is_pass(self) -> bool {
        self == Verdict::Pass
    }
}

/// Outcome of one checker: residuals are violation measures, so the
/// verdict is `pass` exactly when `max_residual <= tol`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    /// Number of points (or samples) evaluated.
    pub grid: usize,
    /// Points excluded because they left a domain or hit a degenerate case.
    pub skipped: usize,
    #[serde(with = "float")]
    pub max_residual: f64,
    #[serde(with = "float")]
    pub mean_residual: f64,
    #[serde(with = "float_vec")]
    pub argmax: Vec<f64>,
    pub verdict: Verdict,
    #[serde(with = "float")]
    pub tol: f64,
    #[serde(with = "float")]
    pub wall_ms: f64,
    #[serde(with = "float_map", default)]
    pub extras: BTreeMap<String, f64>,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl CheckReport {
    /// A report for a single residual.
    pub fn scalar(name: impl Into<String>, residual: f64, tol: f64) -> Self {
        let mut r = Self {
            name: name.into(),
            grid: 1,
            skipped: 0,
            max_residual: residual,
            mean_residual: residual,
            argmax: Vec::new(),
            verdict: Verdict::Fail,
            tol,
            wall_ms: 0.0,
            extras: BTreeMap::new(),
            notes: Vec::new(),
        };
        r.settle();
        r
    }

    /// Recomputes the verdict from the residual and tolerance; a report with
    /// no evaluated points is inconclusive.
    pub fn settle(&mut self) {
        self.verdict = if self.grid == 0 {
            Verdict::Inconclusive
        } else if self.max_residual <= self.tol {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
    }

    pub fn with_extra(mut self, key: &str, value: f64) -> Self {
        self.extras.insert(key.to_string(), value);
        self
    }

    pub fn extra(&self, key: &str) -> Option<f64> {
        self.extras.get(key).copied()
    }

    pub fn note(&mut self, msg: impl Into<String>) {
        self.notes.push(msg.into());
    }

    pub(crate) fn timed(mut self, start: Instant) -> Self {
        self.wall_ms = start.elapsed().as_secs_f64() * 1e3;
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict.is_pass()
    }
}

/// Residual at one point plus named diagnostics that are folded by maximum.
#[derive(Clone, Debug, PartialEq)]
pub struct PointEval {
    pub residual: f64,
    pub components: Vec<(&'static str, f64)>,
}

impl PointEval {
    pub fn new(residual: f64) -> Self {
        Self {
            residual,
            components: Vec::new(),
        }
    }

    pub fn with(mut self, key: &'static str, value: f64) -> Self {
        self.components.push((key, value));
        self
    }
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Less => return true,
            std::cmp::Ordering::Greater => return false,
            std::cmp::Ordering::Equal => {}
        }
    }
    a.len() < b.len()
}

/// Evaluates `f` at every point in parallel, then folds sequentially in point
/// order. Points for which `f` returns `Ok(None)` or a domain error are
/// skipped and counted; any other error aborts the sweep.
///
/// Non-finite residuals count as `+∞`. Ties for the maximum go to the
/// lexicographically smallest point.
pub fn sweep<F>(name: impl Into<String>, points: &[Vec<f64>], tol: f64, f: F) -> Result<CheckReport>
where
    F: Fn(&[f64]) -> Result<Option<PointEval>> + Sync,
{
    let start = Instant::now();
    let evals: Vec<Result<Option<PointEval>>> = points.par_iter().map(|p| f(p)).collect();
    let mut report = CheckReport::scalar(name, 0.0, tol);
    report.grid = 0;
    let mut best = f64::NEG_INFINITY;
    let mut sum = 0.0;
    let mut components: BTreeMap<String, f64> = BTreeMap::new();
    let mut first_skip: Option<Vec<f64>> = None;
    for (p, e) in points.iter().zip(evals) {
        let eval = match e {
            Ok(Some(v)) => v,
            Ok(None) | Err(Error::Domain(_)) => {
                report.skipped += 1;
                first_skip.get_or_insert_with(|| p.clone());
                continue;
            }
            Err(err) => return Err(err),
        };
        let r = if eval.residual.is_nan() { f64::INFINITY } else { eval.residual };
        report.grid += 1;
        sum += r;
        if r > best || (r == best && lex_less(p, &report.argmax)) {
            best = r;
            report.argmax = p.clone();
        }
        for (k, v) in eval.components {
            let slot = components.entry(k.to_string()).or_insert(f64::NEG_INFINITY);
            if v > *slot || v.is_nan() {
                *slot = v;
            }
        }
    }
    if report.grid > 0 {
        report.max_residual = best;
        report.mean_residual = sum / report.grid as f64;
    }
    if let Some(p) = first_skip {
        report.note(format!("{} point(s) skipped; first at {:?}", report.skipped, p));
    }
    report.extras = components;
    report.settle();
    Ok(report.timed(start))
}

pub(crate) mod float {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    pub(super) enum Repr {
        Num(f64),
        Text(String),
    }

    pub(super) fn to_repr(v: f64) -> Repr {
        if v.is_finite() {
            Repr::Num(v)
        } else if v.is_nan() {
            Repr::Text("NaN".into())
        } else if v > 0.0 {
            Repr::Text("Infinity".into())
        } else {
            Repr::Text("-Infinity".into())
        }
    }

    pub(super) fn from_repr<E: serde::de::Error>(r: Repr) -> Result<f64, E> {
        match r {
            Repr::Num(v) => Ok(v),
            Repr::Text(s) => match s.as_str() {
                "NaN" => Ok(f64::NAN),
                "Infinity" => Ok(f64::INFINITY),
                "-Infinity" => Ok(f64::NEG_INFINITY),
                other => Err(E::custom(format!("invalid float '{other}'"))),
            },
        }
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        to_repr(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        from_repr(Repr::deserialize(d)?)
    }
}

pub(crate) mod float_vec {
    use super::float::{from_repr, to_repr, Repr};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|x| to_repr(*x)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<Repr>::deserialize(d)?.into_iter().map(from_repr).collect()
    }
}

pub(crate) mod float_map {
    use std::collections::BTreeMap;

    use super::float::{from_repr, to_repr, Repr};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &BTreeMap<String, f64>, s: S) -> Result<S::Ok, S::Error> {
        v.iter()
            .map(|(k, x)| (k.clone(), to_repr(*x)))
            .collect::<BTreeMap<_, _>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, f64>, D::Error> {
        BTreeMap::<String, Repr>::deserialize(d)?
            .into_iter()
            .map(|(k, r)| from_repr(r).map(|v| (k, v)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_tracks_tolerance() {
        assert!(CheckReport::scalar("a", 1e-9, 1e-8).passed());
        assert!(!CheckReport::scalar("a", 1e-7, 1e-8).passed());
        assert!(!CheckReport::scalar("a", f64::NAN, 1e-8).passed());
    }

    #[test]
    fn sweep_tie_breaks_and_skips() {
        let pts = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.5, 0.5], vec![2.0, 2.0]];
        let r = sweep("t", &pts, 0.5, |p| {
            if p[0] > 1.5 {
                return Err(Error::domain("out"));
            }
            Ok(Some(PointEval::new(if p[0] == 0.5 { 0.1 } else { 1.0 }).with("c", p[1])))
        })
        .unwrap();
        assert_eq!(r.argmax, vec![0.0, 1.0]);
        assert_eq!(r.grid, 3);
        assert_eq!(r.skipped, 1);
        assert_eq!(r.extra("c"), Some(1.0));
        assert!((r.mean_residual - 0.7).abs() < 1e-15);
        assert_eq!(r.verdict, Verdict::Fail);
    }

    #[test]
    fn sweep_propagates_hard_errors() {
        let pts = vec![vec![0.0]];
        assert!(sweep("t", &pts, 1.0, |_| Err(Error::usage("bad"))).is_err());
    }

    #[test]
    fn empty_sweep_is_inconclusive() {
        let r = sweep("t", &[], 1.0, |_| Ok(None)).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn json_round_trip_with_non_finite() {
        let mut r = CheckReport::scalar("x", f64::INFINITY, 1e-8).with_extra("nan", f64::NAN);
        r.argmax = vec![0.1, f64::NEG_INFINITY];
        let s = serde_json::to_string(&r).unwrap();
        let back: CheckReport = serde_json::from_str(&s).unwrap();
        assert_eq!(back.max_residual, f64::INFINITY);
        assert!(back.extra("nan").unwrap().is_nan());
        assert_eq!(back.argmax, r.argmax);
        let finite = CheckReport::scalar("y", 0.1 + 0.2, 1.0).with_extra("k", 1.0 / 3.0);
        let back: CheckReport = serde_json::from_str(&serde_json::to_string(&finite).unwrap()).unwrap();
        assert_eq!(back, finite);
    }
}
