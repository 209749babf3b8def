//! Batch runner: executes the scenarios of an [`ExperimentConfig`] and
//! writes the JSON report and CSV plot data.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::{BorellB, BoxDomain, Candidate, PowerProduct, DEFAULT_MARGIN};
use crate::config::{ExperimentConfig, Kind, Scenario, Task, Window};
use crate::dbar::{
    dbar_check, dbar_field, elliptic_reduction_check, hodograph_maps, hodograph_system_residual, mn_from_dbar,
    monge_ampere_residual, parabolic_reduction_check, DbarSolution,
};
use crate::error::{Error, Result};
use crate::general_rank::{gpde1_equivalence, random_ridge_families, second_type_general, GpdeOptions};
use crate::grid::GridSpec;
use crate::linalg::{kernel_algebra_check, ColumnSystem, SymMatrix};
use crate::pde::{
    check_first_type, check_second_type, construct_c_for_b, glavnoe_check, hyper_region, reduced_h_condition,
};
use crate::report::{float, sweep, CheckReport, PointEval, Verdict};
use crate::sets::IntervalSet;
use crate::special::norm_inv;
use crate::verify::{
    borell_stability_verify, brunn_minkowski_check, ehrhard_pl_verify, energy_monotonicity, gaussian_isoperimetry_check,
    gmc_converse_search, hill_evolution, hypercontractivity_verify, noise_stability, tensorization_check, verify_gmc,
    EnergyMeasure, GmcOptions, HillSetup, HyperTest,
};

/// JSON schema every emitted report validates against.
pub const RUN_REPORT_SCHEMA: &str = include_str!("../schema/run_report.schema.json");

/// Environment variable holding the worker-pool size.
pub const WORKERS_ENV: &str = "BELLMAN_WORKERS";

/// Tabular data for one CSV file.
#[derive(Clone, Debug, PartialEq)]
pub struct PlotData {
    /// File stem; the CSV is written to `<out>/<name>.csv`.
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl PlotData {
    fn new(name: String, columns: &[&str]) -> Self {
        Self {
            name,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

/// How one scenario ended.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioOutcome {
    pub name: String,
    pub kind: Kind,
    pub check: String,
    pub params: BTreeMap<String, String>,
    pub expect: Verdict,
    /// Combined verdict of the scenario's checks; absent after an error.
    pub observed: Option<Verdict>,
    pub ok: bool,
    pub error: Option<String>,
    /// Names of the entries in [`RunReport::checks`] produced by this scenario.
    pub checks: Vec<String>,
}

/// Host-dependent facts kept apart from the numeric results.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub started_unix_ms: u64,
    pub host: String,
    pub workers: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub experiment: String,
    pub params: BTreeMap<String, String>,
    pub checks: Vec<CheckReport>,
    pub scenarios: Vec<ScenarioOutcome>,
    pub verdict: Verdict,
    pub tool_version: String,
    #[serde(with = "float")]
    pub runtime_ms: f64,
    pub metadata: Metadata,
}

impl RunReport {
    /// The report with wall-clock times and metadata cleared, for comparing runs.
    pub fn canonical(&self) -> Self {
        let mut r = self.clone();
        r.runtime_ms = 0.0;
        r.metadata = Metadata::default();
        for c in &mut r.checks {
            c.wall_ms = 0.0;
        }
        r
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn passed(&self) -> bool {
        self.verdict.is_pass()
    }
}

#[derive(Clone, Debug)]
pub struct SuiteOutput {
    pub report: RunReport,
    pub plots: Vec<PlotData>,
}

/// Worker count from [`WORKERS_ENV`]; `None` when unset, empty or zero.
pub fn workers_from_env() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(v) if v.trim().is_empty() => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(0) => Ok(None),
            Ok(n) => Ok(Some(n)),
            Err(_) => Err(Error::usage(format!("{WORKERS_ENV} must be a positive integer, got '{v}'"))),
        },
    }
}

struct Ctx {
    tol: f64,
    grid: usize,
    gh: Option<usize>,
    default_gh: usize,
    seed: u64,
}

fn window_grid(window: Window, domain: &BoxDomain, count: usize) -> Result<GridSpec> {
    match (window.lo, window.hi) {
        (Some(lo), Some(hi)) => GridSpec::uniform(domain.dim(), lo, hi, count),
        (None, None) => GridSpec::within(domain, count, DEFAULT_MARGIN),
        _ => Err(Error::usage("set both lo and hi, or neither")),
    }
}

fn plane_grid(window: Window, default: (f64, f64), count: usize) -> Result<GridSpec> {
    GridSpec::uniform(2, window.lo.unwrap_or(default.0), window.hi.unwrap_or(default.1), count)
}

fn disk_sample(count: usize, radius: f64, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let r = radius * rng.random::<f64>().sqrt();
            let th = rng.random_range(0.0..std::f64::consts::TAU);
            (r * th.cos(), r * th.sin())
        })
        .collect()
}

/// A report whose residual is replaced by `residual`, keeping the diagnostics.
fn rescored(base: &CheckReport, name: String, residual: f64, tol: f64) -> CheckReport {
    let mut r = CheckReport::scalar(name, residual, tol);
    r.extras = base.extras.clone();
    r.notes = base.notes.clone();
    r.wall_ms = base.wall_ms;
    if base.verdict == Verdict::Inconclusive {
        r.verdict = Verdict::Inconclusive;
    }
    r
}

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn run_task(name: &str, task: &Task, ctx: &Ctx) -> Result<(Vec<CheckReport>, Vec<PlotData>)> {
    let tol = ctx.tol;
    let mut plots = Vec::new();
    let reports = match task {
        Task::FirstType {
            b,
            sys,
            c,
            window,
            max_eigenvalue,
        } => {
            let r = check_first_type(b.as_ref(), sys, c, &window_grid(*window, &b.domain(), ctx.grid)?, tol)?;
            let mut out = vec![];
            if let Some(m) = max_eigenvalue {
                let lam = r.extra("worst_eigenvalue").unwrap_or(f64::INFINITY);
                let mut e = rescored(&r, format!("nsd[{}]", b.name()), lam, *m);
                e.grid = r.grid;
                e.argmax = r.argmax.clone();
                out.push(r);
                out.push(e);
            } else {
                out.push(r);
            }
            out
        }
        Task::SecondType { b, sys, c, window } => {
            vec![check_second_type(b.as_ref(), sys, c, &window_grid(*window, &b.domain(), ctx.grid)?, tol)?]
        }
        Task::ReducedH { h, a_n, c, window, mode } => {
            vec![reduced_h_condition(h.as_ref(), a_n, c, &window_grid(*window, &h.domain(), ctx.grid)?, tol, *mode)?]
        }
        Task::Glavnoe { h, alpha, beta, window } => {
            vec![glavnoe_check(h.as_ref(), *alpha, *beta, &window_grid(*window, &h.domain(), ctx.grid)?, tol)?]
        }
        Task::MongeAmpere { b, c, window } => {
            vec![monge_ampere_residual(b.as_ref(), *c, &window_grid(*window, &b.domain(), ctx.grid)?, tol)?]
        }
        Task::HodographSystem { b, c, window } => {
            vec![hodograph_system_residual(b.as_ref(), *c, &window_grid(*window, &b.domain(), ctx.grid)?, tol)?]
        }
        Task::KernelAlgebra { instances } => vec![kernel_algebra_check(*instances, ctx.seed, tol)?],
        Task::Tensorization { p, n, window } => {
            let dom = BorellB::new(*p)?.domain();
            vec![tensorization_check(*p, *n, &window_grid(*window, &dom, ctx.grid)?, tol)?]
        }
        Task::GeneralSecondType { b, blocks, c, window } => {
            vec![second_type_general(b.as_ref(), blocks, c, &window_grid(*window, &b.domain(), ctx.grid)?, tol)?]
        }
        Task::Gpde1 {
            b,
            blocks,
            c,
            families,
            order,
            window,
        } => {
            let tests = random_ridge_families(b.as_ref(), blocks, *families, ctx.seed)?;
            let mut opts = GpdeOptions::new(window_grid(*window, &b.domain(), ctx.grid)?, blocks.k());
            opts.order = *order;
            opts.tol = tol;
            vec![gpde1_equivalence(b.as_ref(), blocks, c, &tests, &opts)?]
        }
        Task::Energy {
            b,
            sys,
            c,
            data,
            times,
            measure,
            limit_tol,
        } => {
            let measure = match *measure {
                EnergyMeasure::Gaussian { order: 0 } => EnergyMeasure::Gaussian {
                    order: ctx.gh.unwrap_or(ctx.default_gh),
                },
                m => m,
            };
            let (curve, r) = energy_monotonicity(b.as_ref(), data, sys, c, times, measure, tol)?;
            let mut plot = PlotData::new(format!("{name}-energy"), &["t", "E", "measure"]);
            for (t, e) in curve.times.iter().zip(&curve.values) {
                plot.push(vec![num(*t), num(*e), curve.measure.clone()]);
            }
            plots.push(plot);
            let mut out = vec![];
            if let Some(lt) = limit_tol {
                let gap = r.extra("limit_gap").map(f64::abs).unwrap_or(f64::INFINITY);
                let l = rescored(&r, format!("energy-limit[{}]", b.name()), gap, *lt);
                out.push(r);
                out.push(l);
            } else {
                out.push(r);
            }
            out
        }
        Task::Hill {
            alpha,
            u1,
            u2,
            delta,
            radius,
            horizon,
            samples,
            window,
        } => {
            let s = HillSetup::ehrhard(*alpha, u1.clone(), u2.clone(), *delta, *radius)?;
            let space = plane_grid(*window, (-4.0, 4.0), ctx.grid)?;
            let r = hill_evolution(s.b, &s.sys, &s.c, &s.data, *horizon, &space, *samples, tol)?;
            vec![r.with_extra("eps_h", s.eps_h)]
        }
        Task::Gmc { b, sys, c, data } => {
            let mut opts = GmcOptions::default();
            if let Some(o) = ctx.gh {
                opts.order = o;
            }
            vec![verify_gmc(b.as_ref(), sys, c, data, opts, tol)?]
        }
        Task::GmcConverse {
            b,
            sys,
            c,
            base,
            eps,
            threshold,
        } => vec![gmc_converse_search(b.as_ref(), sys, c, base, *eps, *threshold)?.0],
        Task::Hypercontractivity {
            p,
            times,
            rates,
            inflate,
            quadrature,
            equality,
        } => {
            let mut out = Vec::new();
            for &t in times {
                let q = 1.0 + inflate * (2.0 * t).exp() * (p - 1.0);
                for &c in rates {
                    let g = if *quadrature {
                        HyperTest::General(Arc::new(move |x: f64| (c * x).exp()))
                    } else {
                        HyperTest::Exp { c }
                    };
                    let r = hypercontractivity_verify(*p, q, t, &g, tol)?;
                    let label = format!("hypercontractivity[P={p},Q={q},t={t},c={c}]");
                    let ratio = r.extra("ratio").unwrap_or(f64::NAN);
                    let resid = if *equality { (ratio - 1.0).abs() } else { ratio - 1.0 };
                    out.push(rescored(&r, label, resid, tol).with_extra("closed_form_ratio", crate::verify::exp_log_ratio(*p, q, t, c).exp()));
                }
            }
            out
        }
        Task::Orthant { p, u, v, expected } => {
            let b = BorellB::new(*p)?;
            let value = b.value(&[*u, *v])?;
            let (oracle, err) = noise_stability(*p, &IntervalSet::left_ray(norm_inv(*u)?), &IntervalSet::left_ray(norm_inv(*v)?))?;
            let mut resid = (value - oracle).abs();
            if let Some(e) = expected {
                resid = resid.max((oracle - e).abs());
            }
            let mut r = CheckReport::scalar(format!("orthant[p={p},u={u},v={v}]"), resid, tol)
                .with_extra("value", value)
                .with_extra("oracle", oracle)
                .with_extra("quad_error", err);
            if let Some(e) = expected {
                r = r.with_extra("expected", *e);
            }
            vec![r]
        }
        Task::NoiseStability { p, a, b, equality } => {
            let r = borell_stability_verify(*p, a, b, tol)?;
            if *equality {
                let gap = r.extra("equality_gap").unwrap_or(f64::NAN).abs();
                vec![rescored(&r, r.name.clone(), gap, tol)]
            } else {
                vec![r]
            }
        }
        Task::EhrhardPl { profile, b, f, opts } => {
            vec![ehrhard_pl_verify(profile, *b, [f[0].as_ref(), f[1].as_ref()], *opts, tol)?]
        }
        Task::Isoperimetry {
            set,
            times,
            equality,
            min_gap,
        } => {
            let r = gaussian_isoperimetry_check(set, times, tol)?;
            let gap = r.extra("min_gap").unwrap_or(f64::NAN);
            let mut out = vec![];
            if *equality {
                let mut e = rescored(&r, "isoperimetry-equality".into(), gap.abs(), tol);
                e.grid = r.grid;
                out.push(e);
            }
            if let Some(m) = min_gap {
                let mut s = rescored(&r, "isoperimetry-strict".into(), m - gap, 0.0);
                s.grid = r.grid;
                out.push(s);
            }
            out.insert(0, r);
            out
        }
        Task::BrunnMinkowski { u, v, lambdas, delta } => {
            let r = brunn_minkowski_check(u, v, lambdas, *delta, tol)?;
            let g = rescored(&r, "brunn-minkowski-resolution".into(), r.extra("exact_gap").unwrap_or(f64::NAN), *delta);
            vec![r, g]
        }
        Task::DbarResidual {
            coeffs,
            order,
            points,
            radius,
            h,
        } => {
            let sol = DbarSolution::new(coeffs, *order)?;
            let pts = disk_sample(*points, *radius, ctx.seed);
            let mut plot = PlotData::new(format!("{name}-dbar"), &["re", "im", "residual"]);
            for (re, im, res) in dbar_field(&sol, &pts, *h)? {
                plot.push(vec![num(re), num(im), num(res)]);
            }
            plots.push(plot);
            vec![dbar_check(&sol, &pts, *h, tol)?]
        }
        Task::Hodograph { count, c_max } => {
            let cs: Vec<Vec<f64>> = (0..*count)
                .map(|i| {
                    let mag = 1.0 + (c_max - 1.0) * (i + 1) as f64 / *count as f64;
                    vec![if i % 2 == 0 { mag } else { -mag }]
                })
                .collect();
            vec![sweep("hodograph-compatibility", &cs, tol, |c| {
                Ok(Some(PointEval::new(hodograph_maps(c[0])?.compatibility()?)))
            })?]
        }
        Task::NmSystem {
            c,
            coeffs,
            order,
            points,
            radius,
        } => {
            let sol = DbarSolution::new(coeffs, *order)?;
            let pts: Vec<Vec<f64>> = disk_sample(*points, *radius, ctx.seed).into_iter().map(|(x, y)| vec![x, y]).collect();
            vec![sweep(format!("nm-system[c={c}]"), &pts, tol, |z| {
                Ok(Some(PointEval::new(mn_from_dbar(&sol, *c, (z[0], z[1]))?.residual)))
            })?]
        }
        Task::Parabolic { c1, c2, w, window } => {
            vec![parabolic_reduction_check(*c1, *c2, w, &plane_grid(*window, (-1.0, 1.0), ctx.grid)?, tol)?]
        }
        Task::Elliptic { c1, c2, w, window } => {
            vec![elliptic_reduction_check(*c1, *c2, w, &plane_grid(*window, (-1.0, 1.0), ctx.grid)?, tol)?]
        }
        Task::HyperRegion { p, a, b, probe, margin } => {
            let (r, plot) = hyper_region_scan(name, *p, *a, *b, ctx.grid, *probe, *margin, tol)?;
            plots.push(plot);
            vec![r]
        }
        Task::A1Region { lo, hi } => {
            let (r, plot) = a1_region_scan(name, *lo, *hi, ctx.grid, tol)?;
            plots.push(plot);
            vec![r]
        }
    };
    Ok((reports, plots))
}

/// Compares the closed-form region with the first-type eigenvalue test of
/// the power product on a probe grid. Points within `margin` of the
/// boundary curve are written to the CSV but not scored.
#[allow(clippy::too_many_arguments)]
fn hyper_region_scan(
    name: &str,
    p: f64,
    a: (f64, f64),
    b: (f64, f64),
    count: usize,
    probe: usize,
    margin: f64,
    tol: f64,
) -> Result<(CheckReport, PlotData)> {
    let start = Instant::now();
    let sys = ColumnSystem::correlated_pair(p)?;
    let c = SymMatrix::identity(2);
    let probe_grid = GridSpec::uniform(2, 0.5, 2.0, probe.max(2))?;
    let mut plot = PlotData::new(format!("{name}-region"), &["a", "b", "p", "admissible"]);
    let pts = GridSpec::new(vec![
        crate::grid::Axis { lo: a.0, hi: a.1, count },
        crate::grid::Axis { lo: b.0, hi: b.1, count },
    ])?
    .points();
    let mut report = sweep(format!("hyper-region[p={p}]"), &pts, tol, |x| {
        let admissible = hyper_region(x[0], x[1], p);
        if ((x[0] - 1.0) * (x[1] - 1.0) - p * p).abs() < margin {
            return Ok(None);
        }
        let r = check_first_type(&PowerProduct::new(x[0], x[1])?, &sys, &c, &probe_grid, 0.0)?;
        let nsd = r.extra("worst_eigenvalue").unwrap_or(f64::INFINITY) <= 1e-12;
        Ok(Some(PointEval::new(if nsd == admissible { 0.0 } else { 1.0 })))
    })?;
    for x in &pts {
        plot.push(vec![num(x[0]), num(x[1]), num(p), hyper_region(x[0], x[1], p).to_string()]);
    }
    report.note("points near the boundary curve are not scored");
    Ok((report.timed(start), plot))
}

/// Feasibility of the admissible `C` over a square of coefficient pairs,
/// against the polygon inequalities, plus the defining identities of `C`.
fn a1_region_scan(name: &str, lo: f64, hi: f64, count: usize, tol: f64) -> Result<(CheckReport, PlotData)> {
    let pts = GridSpec::uniform(2, lo, hi, count)?.points();
    let mut plot = PlotData::new(format!("{name}-a1"), &["b1", "b2", "feasible"]);
    for x in &pts {
        plot.push(vec![num(x[0]), num(x[1]), construct_c_for_b(x).is_ok().to_string()]);
    }
    let report = sweep("a1-region", &pts, tol, |x| {
        let slack = (x[0] + x[1] - 1.0).min(1.0 - (x[0] - x[1]).abs());
        if slack.abs() < 1e-9 {
            return Ok(None);
        }
        let predicted = slack > 0.0;
        Ok(Some(match construct_c_for_b(x) {
            Ok(w) => {
                let c = &w.c;
                let diag = (c.get(0, 0) - 1.0).abs().max((c.get(1, 1) - 1.0).abs());
                let quad = (c.get(0, 0) * x[0] * x[0] + 2.0 * c.get(0, 1) * x[0] * x[1] + c.get(1, 1) * x[1] * x[1] - 1.0).abs();
                let psd = (-c.eigenvalues()[0]).max(0.0);
                let mismatch = if predicted { 0.0 } else { 1.0 };
                PointEval::new(diag.max(quad).max(psd).max(mismatch))
            }
            Err(_) => PointEval::new(if predicted { 1.0 } else { 0.0 }),
        }))
    })?;
    Ok((report, plot))
}

fn combined(checks: &[CheckReport]) -> Verdict {
    if checks.iter().any(|c| c.verdict == Verdict::Fail) {
        Verdict::Fail
    } else if checks.is_empty() || checks.iter().any(|c| c.verdict == Verdict::Inconclusive) {
        Verdict::Inconclusive
    } else {
        Verdict::Pass
    }
}

fn run_scenario(cfg: &ExperimentConfig, sc: &Scenario) -> (ScenarioOutcome, Vec<CheckReport>, Vec<PlotData>) {
    let ctx = Ctx {
        tol: sc.tol.unwrap_or(cfg.tol),
        grid: sc.grid.unwrap_or(cfg.grid),
        gh: sc.gh,
        default_gh: cfg.gh,
        seed: sc.seed.unwrap_or(cfg.seed),
    };
    let mut outcome = ScenarioOutcome {
        name: sc.name.clone(),
        kind: sc.kind,
        check: sc.check.clone(),
        params: sc.params.clone(),
        expect: sc.expect,
        observed: None,
        ok: false,
        error: None,
        checks: Vec::new(),
    };
    match run_task(&sc.name, &sc.task, &ctx) {
        Ok((mut checks, plots)) => {
            for c in &mut checks {
                c.name = format!("{}/{}", sc.name, c.name);
            }
            let v = combined(&checks);
            outcome.observed = Some(v);
            outcome.ok = v == sc.expect;
            outcome.checks = checks.iter().map(|c| c.name.clone()).collect();
            (outcome, checks, plots)
        }
        Err(e) => {
            outcome.error = Some(e.to_string());
            (outcome, Vec::new(), Vec::new())
        }
    }
}

fn host_name() -> String {
    std::env::var("HOSTNAME")
        .ok()
        .filter(|h| !h.is_empty())
        .or_else(|| fs::read_to_string("/etc/hostname").ok().map(|s| s.trim().to_string()))
        .unwrap_or_else(|| "unknown".into())
}

/// Runs every scenario in a pool of `workers` threads (the rayon default
/// when `None`). Scenario errors are recorded and the suite continues; the
/// suite passes when every scenario ends with its expected verdict.
pub fn run_suite(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<SuiteOutput> {
    let start = Instant::now();
    let started_unix_ms = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::usage(format!("cannot start worker pool: {e}")))?;
    let results: Vec<_> = pool.install(|| cfg.scenarios.par_iter().map(|sc| run_scenario(cfg, sc)).collect());

    let mut checks = Vec::new();
    let mut scenarios = Vec::new();
    let mut plots = Vec::new();
    for (o, c, p) in results {
        scenarios.push(o);
        checks.extend(c);
        plots.extend(p);
    }
    let verdict = if scenarios.iter().all(|s| s.ok) { Verdict::Pass } else { Verdict::Fail };
    let report = RunReport {
        experiment: cfg.experiment.clone(),
        params: cfg.params(),
        checks,
        scenarios,
        verdict,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
        metadata: Metadata {
            started_unix_ms,
            host: host_name(),
            workers: pool.current_num_threads(),
        },
    };
    Ok(SuiteOutput { report, plots })
}

fn write(path: PathBuf, contents: &str) -> Result<PathBuf> {
    fs::write(&path, contents).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

/// Writes `report.json` and one CSV per plot into `dir`, creating it if
/// needed. Returns the written paths.
pub fn emit(output: &SuiteOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = vec![write(dir.join("report.json"), &output.report.to_json()?)?];
    for p in &output.plots {
        written.push(write(dir.join(format!("{}.csv", p.name)), &p.to_csv())?);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    const SMALL: &str = "experiment = small\nseed = 3\n\
        [scenario algebra]\nkind = check-pde\ncheck = kernel-algebra\ninstances = 20\n\
        [scenario hodo]\nkind = dbar\ncheck = hodograph\ncount = 5\ntol = 1e-12\n\
        [scenario field]\nkind = dbar\ncheck = residual\ncoeffs = 1,0\npoints = 10\ntol = 1e-5\n\
        [scenario inflated]\nkind = verify\ncheck = hypercontractivity\nP = 2\nt = 0.2\nc = 1\ninflate = 1.5\nmethod = closed\ntol = 1e-4\nexpect = fail\n\
        [scenario region]\nkind = region\ncheck = hyper\np = 0.5\ngrid = 6\n";

    #[test]
    fn empty_suite_passes() {
        let out = run_suite(&parse_config("experiment = none\n").unwrap(), Some(1)).unwrap();
        assert!(out.report.passed());
        assert!(out.report.checks.is_empty());
        assert!(out.plots.is_empty());
    }

    #[test]
    fn small_suite_passes_and_is_deterministic() {
        let cfg = parse_config(SMALL).unwrap();
        let a = run_suite(&cfg, Some(1)).unwrap();
        let b = run_suite(&cfg, Some(3)).unwrap();
        assert!(a.report.passed(), "{:#?}", a.report.scenarios);
        assert_eq!(a.report.canonical().to_json().unwrap(), b.report.canonical().to_json().unwrap());
        assert_eq!(a.plots, b.plots);
        let names: Vec<&str> = a.report.scenarios.iter().map(|s| s.name.as_str()).collect();
        assert_eq!(names, ["algebra", "hodo", "field", "inflated", "region"]);
    }

    #[test]
    fn errors_are_recorded_per_scenario() {
        let text = "[scenario bad]\nkind = dbar\ncheck = parabolic\nc1 = 1\nc2 = 0\nW = constant:v=1\n\
                    [scenario good]\nkind = check-pde\ncheck = kernel-algebra\ninstances = 3\n";
        let out = run_suite(&parse_config(text).unwrap(), None).unwrap();
        assert!(!out.report.passed());
        assert!(out.report.scenarios[0].error.is_some());
        assert!(out.report.scenarios[1].ok);
    }

    #[test]
    fn report_round_trips() {
        let out = run_suite(&parse_config(SMALL).unwrap(), Some(2)).unwrap();
        let json = out.report.to_json().unwrap();
        assert_eq!(RunReport::from_json(&json).unwrap(), out.report);
    }

    #[test]
    fn reports_validate_against_schema() {
        let schema: serde_json::Value = serde_json::from_str(RUN_REPORT_SCHEMA).unwrap();
        let validator = jsonschema::validator_for(&schema).unwrap();
        let text = format!("{SMALL}[scenario broken]\nkind = dbar\ncheck = parabolic\nc1 = 1\nc2 = 0\nW = constant:v=1\n");
        let out = run_suite(&parse_config(&text).unwrap(), Some(1)).unwrap();
        let value: serde_json::Value = serde_json::from_str(&out.report.to_json().unwrap()).unwrap();
        let errors: Vec<String> = validator.iter_errors(&value).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{errors:?}");
        let mut bad = value.clone();
        bad["verdict"] = serde_json::json!("maybe");
        assert!(!validator.is_valid(&bad));
    }

    #[test]
    fn emit_writes_json_and_csv() {
        let dir = tempfile::tempdir().unwrap();
        let out = run_suite(&parse_config(SMALL).unwrap(), Some(2)).unwrap();
        let files = emit(&out, dir.path()).unwrap();
        assert!(files.iter().any(|f| f.ends_with("report.json")));
        let region = fs::read_to_string(dir.path().join("region-region.csv")).unwrap();
        assert!(region.starts_with("a,b,p,admissible\n"));
        assert_eq!(region.lines().count(), 37);
        let field = fs::read_to_string(dir.path().join("field-dbar.csv")).unwrap();
        assert!(field.starts_with("re,im,residual\n"));
    }

    #[test]
    fn io_errors_carry_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        let out = run_suite(&parse_config("experiment = x\n").unwrap(), Some(1)).unwrap();
        match emit(&out, &blocker.join("sub")) {
            Err(Error::Io { path, .. }) => assert!(path.starts_with(&blocker)),
            other => panic!("{other:?}"),
        }
    }
}
