//! Experiment configuration files.
//!
//! A config is plain text, one `key = value` per line. `#` starts a comment.
//! Keys before the first section are global:
//!
//! ```text
//! experiment = smoke        # report name
//! tol = 1e-8                # default tolerance
//! grid = 21                 # default points per grid axis
//! gh = 64                   # default Gauss–Hermite order
//! seed = 7                  # default seed for random instances
//! out = results             # default output directory
//!
//! [scenario borell-first]
//! kind = check-pde
//! check = first-type
//! candidate = borell:p=0.5
//! A = correlated:p=0.5
//! lo = 0.05
//! hi = 0.95
//! ```
//!
//! Every scenario names a `kind` (`check-pde`, `flow`, `verify`, `dbar`,
//! `region`) and a `check`. Besides the keys of its check, a scenario may set
//! `tol`, `grid`, `gh`, `seed` and `expect = pass | fail`. Keys a check does
//! not use are rejected with their position. The value grammars are:
//!
//! * candidates: `borell:p=`, `power:a=,b=`, `ehrhard:alpha=…,profile=`,
//!   `phi:b=…,profile=`, `pmean:p=,lambda=`;
//! * column systems `A`: `correlated:p=`, `basis-plus:b=…`,
//!   `columns:a11,a21;a12,a22` (one column per `;` group);
//! * `C`: `identity`, `rows:…;…`, or `auto-A1:b=…` for the constructed
//!   admissible matrix;
//! * blocks: `tensorized:p=,n=` or `columns:…` (one rank-one block per column);
//! * data (`;`-separated): `bump:center=,width=,height=,base=`,
//!   `interval:lo=,hi=,width=,low=,high=`, `ray:a=,width=`, `constant:v=`;
//! * sets: `lo:hi` parts separated by `;`, with `inf` allowed;
//! * complex coefficients: `re,im` pairs separated by `;`.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::catalog::{parse_candidate, parse_spec, Candidate};
use crate::dbar::{Caloric, LaplaceEigen, DEFAULT_BESSEL_ORDER, DEFAULT_DBAR_STEP};
use crate::error::{Error, Result};
use crate::flows::{Constant, Datum, GaussianBump, MollifiedInterval};
use crate::general_rank::BlockSystem;
use crate::linalg::{ColumnSystem, SymMatrix};
use crate::pde::{construct_c_for_b, HMode};
use crate::profile::ProfileFunction;
use crate::report::Verdict;
use crate::sets::IntervalSet;
use crate::verify::{EnergyMeasure, Lift, PlOptions};

pub const DEFAULT_GRID: usize = 21;
pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_GH: usize = 64;
pub const DEFAULT_SEED: u64 = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    CheckPde,
    Flow,
    Verify,
    Dbar,
    Region,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::CheckPde => "check-pde",
            Kind::Flow => "flow",
            Kind::Verify => "verify",
            Kind::Dbar => "dbar",
            Kind::Region => "region",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "check-pde" => Kind::CheckPde,
            "flow" => Kind::Flow,
            "verify" => Kind::Verify,
            "dbar" => Kind::Dbar,
            "region" => Kind::Region,
            _ => return None,
        })
    }
}

/// Grid window shared by every axis; when absent the candidate's domain is used.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Window {
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

/// A fully parsed check with its inputs.
#[derive(Clone, Debug)]
pub enum Task {
    FirstType {
        b: Arc<dyn Candidate>,
        sys: ColumnSystem,
        c: SymMatrix,
        window: Window,
        /// Extra bound on the worst eigenvalue alone.
        max_eigenvalue: Option<f64>,
    },
    SecondType {
        b: Arc<dyn Candidate>,
        sys: ColumnSystem,
        c: SymMatrix,
        window: Window,
    },
    ReducedH {
        h: Arc<dyn Candidate>,
        a_n: Vec<f64>,
        c: SymMatrix,
        window: Window,
        mode: HMode,
    },
    Glavnoe {
        h: Arc<dyn Candidate>,
        alpha: f64,
        beta: f64,
        window: Window,
    },
    MongeAmpere {
        b: Arc<dyn Candidate>,
        c: f64,
        window: Window,
    },
    HodographSystem {
        b: Arc<dyn Candidate>,
        c: f64,
        window: Window,
    },
    KernelAlgebra {
        instances: usize,
    },
    Tensorization {
        p: f64,
        n: usize,
        window: Window,
    },
    GeneralSecondType {
        b: Arc<dyn Candidate>,
        blocks: BlockSystem,
        c: SymMatrix,
        window: Window,
    },
    Gpde1 {
        b: Arc<dyn Candidate>,
        blocks: BlockSystem,
        c: SymMatrix,
        families: usize,
        order: usize,
        window: Window,
    },
    Energy {
        b: Arc<dyn Candidate>,
        sys: ColumnSystem,
        c: SymMatrix,
        data: Vec<Arc<dyn Datum>>,
        times: Vec<f64>,
        measure: EnergyMeasure,
        limit_tol: Option<f64>,
    },
    Hill {
        alpha: [f64; 2],
        u1: Arc<dyn Datum>,
        u2: Arc<dyn Datum>,
        delta: f64,
        radius: f64,
        horizon: f64,
        samples: usize,
        window: Window,
    },
    Gmc {
        b: Arc<dyn Candidate>,
        sys: ColumnSystem,
        c: SymMatrix,
        data: Vec<Arc<dyn Datum>>,
    },
    GmcConverse {
        b: Arc<dyn Candidate>,
        sys: ColumnSystem,
        c: SymMatrix,
        base: Vec<f64>,
        eps: f64,
        threshold: f64,
    },
    Hypercontractivity {
        p: f64,
        times: Vec<f64>,
        rates: Vec<f64>,
        /// Factor applied to `Q - 1` on the boundary.
        inflate: f64,
        /// Use quadrature rather than the closed form.
        quadrature: bool,
        /// Residual `|ratio - 1|` rather than `ratio - 1`.
        equality: bool,
    },
    Orthant {
        p: f64,
        u: f64,
        v: f64,
        expected: Option<f64>,
    },
    NoiseStability {
        p: f64,
        a: IntervalSet,
        b: IntervalSet,
        equality: bool,
    },
    EhrhardPl {
        profile: ProfileFunction,
        b: [f64; 2],
        f: [Arc<dyn Datum>; 2],
        opts: PlOptions,
    },
    Isoperimetry {
        set: IntervalSet,
        times: Vec<f64>,
        equality: bool,
        min_gap: Option<f64>,
    },
    BrunnMinkowski {
        u: IntervalSet,
        v: IntervalSet,
        lambdas: Vec<f64>,
        delta: f64,
    },
    DbarResidual {
        coeffs: Vec<(f64, f64)>,
        order: usize,
        points: usize,
        radius: f64,
        h: f64,
    },
    Hodograph {
        count: usize,
        c_max: f64,
    },
    NmSystem {
        c: f64,
        coeffs: Vec<(f64, f64)>,
        order: usize,
        points: usize,
        radius: f64,
    },
    Parabolic {
        c1: f64,
        c2: f64,
        w: Caloric,
        window: Window,
    },
    Elliptic {
        c1: f64,
        c2: f64,
        w: LaplaceEigen,
        window: Window,
    },
    HyperRegion {
        p: f64,
        a: (f64, f64),
        b: (f64, f64),
        probe: usize,
        margin: f64,
    },
    A1Region {
        lo: f64,
        hi: f64,
    },
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub kind: Kind,
    pub check: String,
    pub line: usize,
    pub expect: Verdict,
    pub tol: Option<f64>,
    pub grid: Option<usize>,
    pub gh: Option<usize>,
    pub seed: Option<u64>,
    /// Raw values as written, echoed into reports.
    pub params: BTreeMap<String, String>,
    pub task: Task,
}

impl Scenario {
    /// Whether the check belongs to the block (general-rank) family.
    pub fn is_general_rank(&self) -> bool {
        matches!(
            self.task,
            Task::GeneralSecondType { .. } | Task::Gpde1 { .. } | Task::Tensorization { .. }
        )
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub tol: f64,
    pub grid: usize,
    pub gh: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub scenarios: Vec<Scenario>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: "experiment".into(),
            tol: DEFAULT_TOL,
            grid: DEFAULT_GRID,
            gh: DEFAULT_GH,
            seed: DEFAULT_SEED,
            out: None,
            scenarios: Vec::new(),
        }
    }
}

impl ExperimentConfig {
    /// Global settings as strings, in a fixed order.
    pub fn params(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("tol".into(), format!("{:?}", self.tol));
        m.insert("grid".into(), self.grid.to_string());
        m.insert("gh".into(), self.gh.to_string());
        m.insert("seed".into(), self.seed.to_string());
        m.insert("scenarios".into(), self.scenarios.len().to_string());
        m
    }
}

/// The suite shipped with the crate.
pub const PAPER_CORE: &str = include_str!("../suites/paper-core.conf");

#[derive(Clone, Debug)]
struct Entry {
    value: String,
    line: usize,
    key_col: usize,
    val_col: usize,
    used: bool,
}

fn config_err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        column,
        message: message.into(),
    }
}

/// Keys of one section with the positions they were written at.
#[derive(Debug, Default)]
struct Section {
    header_line: usize,
    entries: BTreeMap<String, Entry>,
}

impl Section {
    fn insert(&mut self, key: String, e: Entry) -> Result<()> {
        if let Some(prev) = self.entries.get(&key) {
            return Err(config_err(e.line, e.key_col, format!("duplicate key '{key}' (first set on line {})", prev.line)));
        }
        self.entries.insert(key, e);
        Ok(())
    }

    fn raw(&mut self, key: &str) -> Option<(String, usize, usize)> {
        self.entries.get_mut(key).map(|e| {
            e.used = true;
            (e.value.clone(), e.line, e.val_col)
        })
    }

    fn missing(&self, key: &str) -> Error {
        config_err(self.header_line, 1, format!("missing required key '{key}'"))
    }

    fn with<T>(&mut self, key: &str, f: impl FnOnce(&str) -> Result<T>) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some((v, line, col)) => f(&v).map(Some).map_err(|e| match e {
                Error::Config { .. } => e,
                other => config_err(line, col, format!("invalid value for '{key}': {}", strip_kind(&other))),
            }),
        }
    }

    fn req<T>(&mut self, key: &str, f: impl FnOnce(&str) -> Result<T>) -> Result<T> {
        let missing = self.missing(key);
        self.with(key, f)?.ok_or(missing)
    }

    fn f64(&mut self, key: &str) -> Result<f64> {
        self.req(key, parse_f64)
    }

    fn f64_or(&mut self, key: &str, default: f64) -> Result<f64> {
        Ok(self.with(key, parse_f64)?.unwrap_or(default))
    }

    fn usize_or(&mut self, key: &str, default: usize) -> Result<usize> {
        Ok(self.with(key, parse_usize)?.unwrap_or(default))
    }

    fn list(&mut self, key: &str) -> Result<Vec<f64>> {
        self.req(key, parse_list)
    }

    fn bool_or(&mut self, key: &str, default: bool) -> Result<bool> {
        Ok(self
            .with(key, |v| match v {
                "true" | "yes" => Ok(true),
                "false" | "no" => Ok(false),
                other => Err(Error::usage(format!("expected true or false, found '{other}'"))),
            })?
            .unwrap_or(default))
    }

    fn window(&mut self) -> Result<Window> {
        Ok(Window {
            lo: self.with("lo", parse_f64)?,
            hi: self.with("hi", parse_f64)?,
        })
    }

    fn candidate(&mut self) -> Result<Arc<dyn Candidate>> {
        self.req("candidate", parse_candidate)
    }

    fn system(&mut self) -> Result<ColumnSystem> {
        self.req("A", parse_system)
    }

    fn c_matrix(&mut self, dim: usize) -> Result<SymMatrix> {
        Ok(self.with("C", |v| parse_c(v, dim))?.unwrap_or_else(|| SymMatrix::identity(dim)))
    }

    fn data(&mut self, key: &str) -> Result<Vec<Arc<dyn Datum>>> {
        self.req(key, |v| v.split(';').map(parse_datum).collect())
    }

    fn datum(&mut self, key: &str) -> Result<Arc<dyn Datum>> {
        self.req(key, parse_datum)
    }

    fn set(&mut self, key: &str) -> Result<IntervalSet> {
        self.req(key, parse_set)
    }

    fn pair(&mut self, key: &str) -> Result<[f64; 2]> {
        self.req(key, |v| {
            let l = parse_list(v)?;
            match l[..] {
                [a, b] => Ok([a, b]),
                _ => Err(Error::usage("expected two numbers")),
            }
        })
    }

    fn coeffs(&mut self) -> Result<Vec<(f64, f64)>> {
        self.req("coeffs", |v| {
            v.split(';')
                .map(|pair| match parse_list(pair)?[..] {
                    [re, im] => Ok((re, im)),
                    _ => Err(Error::usage(format!("coefficient '{}' must be re,im", pair.trim()))),
                })
                .collect()
        })
    }

    fn finish(&self) -> Result<()> {
        match self.entries.iter().filter(|(_, e)| !e.used).min_by_key(|(_, e)| (e.line, e.key_col)) {
            Some((k, e)) => Err(config_err(e.line, e.key_col, format!("unknown key '{k}'"))),
            None => Ok(()),
        }
    }
}

fn strip_kind(e: &Error) -> String {
    match e {
        Error::Usage(m) | Error::Domain(m) | Error::Precondition(m) => m.clone(),
        other => other.to_string(),
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::usage(format!("expected a number, found '{}'", s.trim())))
}

fn parse_usize(s: &str) -> Result<usize> {
    s.trim()
        .parse::<usize>()
        .map_err(|_| Error::usage(format!("expected a non-negative integer, found '{}'", s.trim())))
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(parse_f64).collect()
}

fn parse_rows(s: &str) -> Result<Vec<Vec<f64>>> {
    s.split(';').map(parse_list).collect()
}

type Params = Vec<(String, std::result::Result<Vec<f64>, String>)>;

/// Looks up a numeric parameter of a `name:k=v,...` spec.
fn spec_num(params: &Params, name: &str, key: &str, default: Option<f64>) -> Result<f64> {
    match params.iter().find(|(k, _)| k == key) {
        Some((_, Ok(v))) if v.len() == 1 => Ok(v[0]),
        Some(_) => Err(Error::usage(format!("'{name}' parameter '{key}' must be a single number"))),
        None => default.ok_or_else(|| Error::usage(format!("'{name}' needs parameter '{key}'"))),
    }
}

fn spec_list(params: &Params, name: &str, key: &str) -> Result<Vec<f64>> {
    match params.iter().find(|(k, _)| k == key) {
        Some((_, Ok(v))) => Ok(v.clone()),
        _ => Err(Error::usage(format!("'{name}' needs numeric list '{key}'"))),
    }
}

fn only_keys(params: &Params, name: &str, allowed: &[&str]) -> Result<()> {
    match params.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
        Some((k, _)) => Err(Error::usage(format!("'{name}' has no parameter '{k}'"))),
        None => Ok(()),
    }
}

pub fn parse_system(s: &str) -> Result<ColumnSystem> {
    if let Some(rest) = s.trim().strip_prefix("columns:") {
        return ColumnSystem::from_columns(&parse_rows(rest)?);
    }
    let (name, params) = parse_spec(s)?;
    match name.as_str() {
        "correlated" => {
            only_keys(&params, &name, &["p"])?;
            ColumnSystem::correlated_pair(spec_num(&params, &name, "p", None)?)
        }
        "basis-plus" => {
            only_keys(&params, &name, &["b"])?;
            ColumnSystem::basis_plus(&spec_list(&params, &name, "b")?)
        }
        other => Err(Error::usage(format!("unknown system '{other}' (expected correlated, basis-plus or columns)"))),
    }
}

pub fn parse_c(s: &str, dim: usize) -> Result<SymMatrix> {
    let s = s.trim();
    if s == "identity" {
        return Ok(SymMatrix::identity(dim));
    }
    if let Some(rest) = s.strip_prefix("rows:") {
        let c = SymMatrix::from_rows(&parse_rows(rest)?)?;
        if c.dim() != dim {
            return Err(Error::usage(format!("C has dimension {}, expected {dim}", c.dim())));
        }
        return Ok(c);
    }
    let (name, params) = parse_spec(s)?;
    if name != "auto-A1" {
        return Err(Error::usage(format!("unknown C spec '{name}' (expected identity, rows or auto-A1)")));
    }
    only_keys(&params, &name, &["b"])?;
    let b = spec_list(&params, &name, "b")?;
    let w = construct_c_for_b(&b).map_err(|e| Error::usage(format!("no admissible C: {e}")))?;
    if w.c.dim() != dim {
        return Err(Error::usage(format!("auto-A1 gives dimension {}, expected {dim}", w.c.dim())));
    }
    Ok(w.c)
}

pub fn parse_blocks(s: &str) -> Result<BlockSystem> {
    if let Some(rest) = s.trim().strip_prefix("columns:") {
        return BlockSystem::from_columns(&ColumnSystem::from_columns(&parse_rows(rest)?)?);
    }
    let (name, params) = parse_spec(s)?;
    match name.as_str() {
        "tensorized" => {
            only_keys(&params, &name, &["p", "n"])?;
            let n = spec_num(&params, &name, "n", None)?;
            if n.fract() != 0.0 || n < 1.0 {
                return Err(Error::usage("tensor power must be a positive integer"));
            }
            BlockSystem::tensorized(spec_num(&params, &name, "p", None)?, n as usize)
        }
        other => Err(Error::usage(format!("unknown block system '{other}' (expected tensorized or columns)"))),
    }
}

pub fn parse_datum(s: &str) -> Result<Arc<dyn Datum>> {
    let (name, params) = parse_spec(s)?;
    let num = |k: &str, d: Option<f64>| spec_num(&params, &name, k, d);
    Ok(match name.as_str() {
        "bump" => {
            only_keys(&params, &name, &["center", "width", "height", "base"])?;
            Arc::new(GaussianBump::new(num("center", None)?, num("width", None)?, num("height", None)?, num("base", Some(0.0))?)?)
        }
        "interval" => {
            only_keys(&params, &name, &["lo", "hi", "width", "low", "high"])?;
            Arc::new(MollifiedInterval::with_levels(
                num("lo", None)?,
                num("hi", None)?,
                num("width", Some(0.0))?,
                num("low", Some(0.0))?,
                num("high", Some(1.0))?,
            )?)
        }
        "ray" => {
            only_keys(&params, &name, &["a", "width"])?;
            Arc::new(MollifiedInterval::ray(num("a", None)?, num("width", Some(0.0))?)?)
        }
        "constant" => {
            only_keys(&params, &name, &["v"])?;
            Arc::new(Constant(num("v", None)?))
        }
        other => return Err(Error::usage(format!("unknown datum '{other}' (expected bump, interval, ray or constant)"))),
    })
}

pub fn parse_set(s: &str) -> Result<IntervalSet> {
    let parts = s
        .split(';')
        .map(|p| match p.split_once(':') {
            Some((a, b)) => Ok((parse_f64(a)?, parse_f64(b)?)),
            None => Err(Error::usage(format!("set part '{}' must be lo:hi", p.trim()))),
        })
        .collect::<Result<Vec<_>>>()?;
    IntervalSet::new(parts)
}

fn parse_caloric(s: &str) -> Result<Caloric> {
    let (name, params) = parse_spec(s)?;
    Ok(match name.as_str() {
        "constant" => {
            only_keys(&params, &name, &["v"])?;
            Caloric::Constant(spec_num(&params, &name, "v", None)?)
        }
        "quadratic" => {
            only_keys(&params, &name, &["scale"])?;
            Caloric::Quadratic(spec_num(&params, &name, "scale", Some(1.0))?)
        }
        "kernel" => {
            only_keys(&params, &name, &["shift"])?;
            Caloric::Kernel {
                shift: spec_num(&params, &name, "shift", None)?,
            }
        }
        other => return Err(Error::usage(format!("unknown caloric function '{other}'"))),
    })
}

fn parse_eigen(s: &str) -> Result<LaplaceEigen> {
    let (name, params) = parse_spec(s)?;
    Ok(match name.as_str() {
        "exp" => {
            only_keys(&params, &name, &["alpha", "beta"])?;
            LaplaceEigen::Exponential {
                alpha: spec_num(&params, &name, "alpha", None)?,
                beta: spec_num(&params, &name, "beta", None)?,
            }
        }
        "harmonic" => {
            only_keys(&params, &name, &[])?;
            LaplaceEigen::Harmonic
        }
        other => return Err(Error::usage(format!("unknown eigenfunction '{other}'"))),
    })
}

fn times(sec: &mut Section, default_horizon: f64, default_samples: usize) -> Result<Vec<f64>> {
    let horizon = sec.f64_or("horizon", default_horizon)?;
    let samples = sec.usize_or("samples", default_samples)?;
    if samples < 2 || !(horizon > 0.0) {
        return Err(config_err(sec.header_line, 1, "need a positive horizon and at least two samples"));
    }
    Ok((0..samples).map(|i| horizon * i as f64 / (samples - 1) as f64).collect())
}

fn build_task(kind: Kind, check: &str, sec: &mut Section) -> Result<Task> {
    use Kind::*;
    Ok(match (kind, check) {
        (CheckPde, "first-type") => {
            let b = sec.candidate()?;
            let sys = sec.system()?;
            Task::FirstType {
                c: sec.c_matrix(sys.k())?,
                b,
                sys,
                window: sec.window()?,
                max_eigenvalue: sec.with("max_eigenvalue", parse_f64)?,
            }
        }
        (CheckPde, "second-type") => {
            let b = sec.candidate()?;
            let sys = sec.system()?;
            Task::SecondType {
                c: sec.c_matrix(sys.k())?,
                b,
                sys,
                window: sec.window()?,
            }
        }
        (CheckPde, "reduced-h") => {
            let h = sec.candidate()?;
            let a_n = sec.list("a")?;
            let mode = sec
                .with("mode", |v| match v {
                    "equality" => Ok(HMode::Equality),
                    "inequality" => Ok(HMode::Inequality),
                    other => Err(Error::usage(format!("expected equality or inequality, found '{other}'"))),
                })?
                .unwrap_or(HMode::Inequality);
            Task::ReducedH {
                c: sec.c_matrix(a_n.len())?,
                h,
                a_n,
                window: sec.window()?,
                mode,
            }
        }
        (CheckPde, "glavnoe") => Task::Glavnoe {
            h: sec.candidate()?,
            alpha: sec.f64("alpha")?,
            beta: sec.f64("beta")?,
            window: sec.window()?,
        },
        (CheckPde, "monge-ampere") => Task::MongeAmpere {
            b: sec.candidate()?,
            c: sec.f64("c")?,
            window: sec.window()?,
        },
        (CheckPde, "hodograph-system") => Task::HodographSystem {
            b: sec.candidate()?,
            c: sec.f64("c")?,
            window: sec.window()?,
        },
        (CheckPde, "kernel-algebra") => Task::KernelAlgebra {
            instances: sec.usize_or("instances", 100)?,
        },
        (CheckPde, "tensorization") => Task::Tensorization {
            p: sec.f64("p")?,
            n: sec.usize_or("n", 2)?,
            window: sec.window()?,
        },
        (CheckPde, "general-second-type") => {
            let b = sec.candidate()?;
            let blocks = sec.req("blocks", parse_blocks)?;
            Task::GeneralSecondType {
                c: sec.c_matrix(blocks.k())?,
                b,
                blocks,
                window: sec.window()?,
            }
        }
        (CheckPde, "gpde1") => {
            let b = sec.candidate()?;
            let blocks = sec.req("blocks", parse_blocks)?;
            Task::Gpde1 {
                c: sec.c_matrix(blocks.k())?,
                b,
                blocks,
                families: sec.usize_or("families", 3)?,
                order: sec.usize_or("order", 24)?,
                window: sec.window()?,
            }
        }
        (Flow, "energy") => {
            let b = sec.candidate()?;
            let sys = sec.system()?;
            let measure = sec.with("measure", |v| match v {
                "gaussian" => Ok(None),
                "lebesgue" => Ok(Some(())),
                other => Err(Error::usage(format!("expected gaussian or lebesgue, found '{other}'"))),
            })?;
            let measure = match measure.flatten() {
                None => EnergyMeasure::Gaussian {
                    order: sec.usize_or("order", 0)?,
                },
                Some(()) => EnergyMeasure::Lebesgue {
                    lo: sec.f64_or("x_lo", -30.0)?,
                    hi: sec.f64_or("x_hi", 30.0)?,
                    step: sec.f64_or("step", 0.01)?,
                },
            };
            Task::Energy {
                c: sec.c_matrix(sys.k())?,
                b,
                sys,
                data: sec.data("data")?,
                times: times(sec, 20.0, 20)?,
                measure,
                limit_tol: sec.with("limit_tol", parse_f64)?,
            }
        }
        (Flow, "hill") => Task::Hill {
            alpha: sec.pair("alpha")?,
            u1: sec.datum("u1")?,
            u2: sec.datum("u2")?,
            delta: sec.f64_or("delta", 0.01)?,
            radius: sec.f64_or("radius", 10.0)?,
            horizon: sec.f64_or("horizon", 1.0)?,
            samples: sec.usize_or("samples", 11)?,
            window: sec.window()?,
        },
        (Verify, "gmc") => {
            let b = sec.candidate()?;
            let sys = sec.system()?;
            Task::Gmc {
                c: sec.c_matrix(sys.k())?,
                b,
                sys,
                data: sec.data("data")?,
            }
        }
        (Verify, "gmc-converse") => {
            let b = sec.candidate()?;
            let sys = sec.system()?;
            Task::GmcConverse {
                c: sec.c_matrix(sys.k())?,
                b,
                sys,
                base: sec.list("base")?,
                eps: sec.f64_or("eps", 0.1)?,
                threshold: sec.f64_or("threshold", 1e-6)?,
            }
        }
        (Verify, "hypercontractivity") => Task::Hypercontractivity {
            p: sec.f64("P")?,
            times: sec.list("t")?,
            rates: sec.list("c")?,
            inflate: sec.f64_or("inflate", 1.0)?,
            quadrature: sec
                .with("method", |v| match v {
                    "quadrature" => Ok(true),
                    "closed" => Ok(false),
                    other => Err(Error::usage(format!("expected quadrature or closed, found '{other}'"))),
                })?
                .unwrap_or(true),
            equality: sec.bool_or("equality", false)?,
        },
        (Verify, "orthant") => Task::Orthant {
            p: sec.f64("p")?,
            u: sec.f64_or("u", 0.5)?,
            v: sec.f64_or("v", 0.5)?,
            expected: sec.with("expected", parse_f64)?,
        },
        (Verify, "noise-stability") => Task::NoiseStability {
            p: sec.f64("p")?,
            a: sec.set("set_a")?,
            b: sec.set("set_b")?,
            equality: sec.bool_or("equality", false)?,
        },
        (Verify, "ehrhard-pl") => {
            let profile = sec.req("profile", ProfileFunction::parse)?;
            let mut opts = PlOptions::default();
            opts.delta = sec.f64_or("delta", opts.delta)?;
            opts.radius = sec.f64_or("radius", opts.radius)?;
            opts.mollifier = sec.f64_or("mollifier", opts.mollifier)?;
            if let Some(l) = sec.with("lift", |v| match v {
                "max-jump" => Ok(Lift::MaxJump),
                other => parse_f64(other).map(Lift::Fixed),
            })? {
                opts.lift = l;
            }
            Task::EhrhardPl {
                b: sec.pair("b")?,
                f: [sec.datum("f1")?, sec.datum("f2")?],
                profile,
                opts,
            }
        }
        (Verify, "isoperimetry") => Task::Isoperimetry {
            set: sec.set("set")?,
            times: sec.list("t")?,
            equality: sec.bool_or("equality", false)?,
            min_gap: sec.with("min_gap", parse_f64)?,
        },
        (Verify, "brunn-minkowski") => Task::BrunnMinkowski {
            u: sec.set("set_u")?,
            v: sec.set("set_v")?,
            lambdas: sec.list("lambda")?,
            delta: sec.f64_or("delta", 1e-3)?,
        },
        (Dbar, "residual") => Task::DbarResidual {
            coeffs: sec.coeffs()?,
            order: sec.usize_or("order", DEFAULT_BESSEL_ORDER)?,
            points: sec.usize_or("points", 200)?,
            radius: sec.f64_or("radius", 1.0)?,
            h: sec.f64_or("h", DEFAULT_DBAR_STEP)?,
        },
        (Dbar, "hodograph") => Task::Hodograph {
            count: sec.usize_or("count", 50)?,
            c_max: sec.f64_or("c_max", 10.0)?,
        },
        (Dbar, "nm-system") => Task::NmSystem {
            c: sec.f64("c")?,
            coeffs: sec.coeffs()?,
            order: sec.usize_or("order", DEFAULT_BESSEL_ORDER)?,
            points: sec.usize_or("points", 50)?,
            radius: sec.f64_or("radius", 0.5)?,
        },
        (Dbar, "parabolic") => Task::Parabolic {
            c1: sec.f64("c1")?,
            c2: sec.f64("c2")?,
            w: sec.req("W", parse_caloric)?,
            window: sec.window()?,
        },
        (Dbar, "elliptic") => Task::Elliptic {
            c1: sec.f64("c1")?,
            c2: sec.f64("c2")?,
            w: sec.req("W", parse_eigen)?,
            window: sec.window()?,
        },
        (Region, "hyper") => {
            let range = |sec: &mut Section, key: &str, d: (f64, f64)| -> Result<(f64, f64)> {
                Ok(sec
                    .with(key, |v| match parse_list(v)?[..] {
                        [a, b] if a < b => Ok((a, b)),
                        _ => Err(Error::usage("expected lo,hi with lo < hi")),
                    })?
                    .unwrap_or(d))
            };
            Task::HyperRegion {
                p: sec.f64("p")?,
                a: range(sec, "a", (1.05, 3.0))?,
                b: range(sec, "b", (1.05, 3.0))?,
                probe: sec.usize_or("probe", 5)?,
                margin: sec.f64_or("margin", 0.02)?,
            }
        }
        (Region, "a1") => Task::A1Region {
            lo: sec.f64_or("lo", 0.1)?,
            hi: sec.f64_or("hi", 3.0)?,
        },
        (kind, other) => {
            let (_, line, col) = sec.raw("check").expect("check key present");
            return Err(config_err(line, col, format!("unknown check '{other}' for kind {}", kind.as_str())));
        }
    })
}

fn build_scenario(name: String, mut sec: Section) -> Result<Scenario> {
    let line = sec.header_line;
    let (kind_text, kl, kc) = sec.raw("kind").ok_or_else(|| sec.missing("kind"))?;
    let kind = Kind::parse(&kind_text)
        .ok_or_else(|| config_err(kl, kc, format!("unknown kind '{kind_text}' (expected check-pde, flow, verify, dbar or region)")))?;
    let check = sec.raw("check").ok_or_else(|| sec.missing("check"))?.0;
    let expect = sec
        .with("expect", |v| match v {
            "pass" => Ok(Verdict::Pass),
            "fail" => Ok(Verdict::Fail),
            other => Err(Error::usage(format!("expected pass or fail, found '{other}'"))),
        })?
        .unwrap_or(Verdict::Pass);
    let tol = sec.with("tol", parse_f64)?;
    let grid = sec.with("grid", parse_usize)?;
    let gh = sec.with("gh", parse_usize)?;
    let seed = sec.with("seed", |v| v.trim().parse::<u64>().map_err(|_| Error::usage("expected an unsigned integer")))?;
    let task = build_task(kind, &check, &mut sec)?;
    sec.finish()?;
    let params = sec.entries.iter().map(|(k, e)| (k.clone(), e.value.clone())).collect();
    Ok(Scenario {
        name,
        kind,
        check,
        line,
        expect,
        tol,
        grid,
        gh,
        seed,
        params,
        task,
    })
}

fn apply_global(cfg: &mut ExperimentConfig, key: &str, e: &Entry) -> Result<()> {
    let wrap = |r: Result<()>| r.map_err(|err| config_err(e.line, e.val_col, strip_kind(&err)));
    match key {
        "experiment" => {
            cfg.experiment = e.value.clone();
            Ok(())
        }
        "tol" => wrap(parse_f64(&e.value).map(|v| cfg.tol = v)),
        "grid" => wrap(parse_usize(&e.value).map(|v| cfg.grid = v)),
        "gh" => wrap(parse_usize(&e.value).map(|v| cfg.gh = v)),
        "seed" => wrap(
            e.value
                .parse::<u64>()
                .map(|v| cfg.seed = v)
                .map_err(|_| Error::usage("expected an unsigned integer")),
        ),
        "out" => {
            cfg.out = Some(PathBuf::from(&e.value));
            Ok(())
        }
        other => Err(config_err(e.line, e.key_col, format!("unknown key '{other}'"))),
    }
}

/// Parses a config; every error carries the line and column it refers to.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    let mut current: Option<(String, Section)> = None;
    let mut names: BTreeMap<String, usize> = BTreeMap::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = content.chars().take_while(|c| c.is_whitespace()).count();
        if let Some(inner) = trimmed.strip_prefix('[') {
            let inner = inner
                .strip_suffix(']')
                .ok_or_else(|| config_err(line, indent + 1, "section header must end with ']'"))?;
            let name = match inner.trim().split_once(char::is_whitespace) {
                Some(("scenario", n)) if !n.trim().is_empty() => n.trim().to_string(),
                _ => return Err(config_err(line, indent + 2, "expected '[scenario NAME]'")),
            };
            if let Some(first) = names.insert(name.clone(), line) {
                return Err(config_err(line, indent + 1, format!("scenario '{name}' already defined on line {first}")));
            }
            if let Some((n, s)) = current.take() {
                cfg.scenarios.push(build_scenario(n, s)?);
            }
            current = Some((
                name,
                Section {
                    header_line: line,
                    ..Section::default()
                },
            ));
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| config_err(line, indent + 1, "expected 'key = value'"))?;
        let key_t = key.trim();
        if key_t.is_empty() || !key_t.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(config_err(line, indent + 1, format!("invalid key '{key_t}'")));
        }
        let value_t = value.trim();
        if value_t.is_empty() {
            return Err(config_err(line, key.chars().count() + 2, format!("key '{key_t}' has no value")));
        }
        let val_col = key.chars().count() + 1 + value.chars().take_while(|c| c.is_whitespace()).count() + 1;
        let entry = Entry {
            value: value_t.to_string(),
            line,
            key_col: indent + 1,
            val_col,
            used: false,
        };
        match current.as_mut() {
            Some((_, sec)) => sec.insert(key_t.to_string(), entry)?,
            None => apply_global(&mut cfg, key_t, &entry)?,
        }
    }
    if let Some((n, s)) = current.take() {
        cfg.scenarios.push(build_scenario(n, s)?);
    }
    if cfg.grid < 2 {
        return Err(config_err(1, 1, "grid must have at least two points per axis"));
    }
    Ok(cfg)
}
