//! Classical inequalities: hypercontractivity, noise stability, Ehrhard and
//! Prékopa–Leindler, Gaussian isoperimetry, Brunn–Minkowski on the line, and
//! tensorization of the Borell core.

use std::sync::Arc;
use std::time::Instant;

use crate::catalog::{BorellB, Candidate};
use crate::error::{Error, Result};
use crate::flows::{Datum, DEFAULT_ORDER};
use crate::grid::GridSpec;
use crate::linalg::{is_nsd, SymMatrix};
use crate::pde::construct_c_for_b;
use crate::profile::ProfileFunction;
use crate::quadrature::{gaussian_expect, integrate, GaussHermite};
use crate::report::{CheckReport, Verdict};
use crate::sets::{gaussian_interval, IntervalSet};
use crate::special::{norm_cdf, norm_inv, norm_pdf};

use super::supconv::{extended_quantile, sup_convolution, Lift};

/// Test function for [`hypercontractivity_verify`].
#[derive(Clone)]
pub enum HyperTest {
    /// `g(x) = e^{cx}`, handled in closed form.
    Exp { c: f64 },
    /// A positive function, handled by quadrature.
    General(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for HyperTest {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            HyperTest::Exp { c } => write!(f, "Exp {{ c: {c} }}"),
            HyperTest::General(_) => write!(f, "General"),
        }
    }
}

/// `log(‖P_t g‖_Q / ‖g‖_P)` for `g = e^{cx}`.
pub fn exp_log_ratio(p: f64, q: f64, t: f64, c: f64) -> f64 {
    0.5 * c * c * ((q - 1.0) * (-2.0 * t).exp() + 1.0 - p)
}

fn lp_norm(f: impl Fn(f64) -> f64, p: f64) -> (f64, bool) {
    let r = gaussian_expect(|x| f(x).abs().powf(p), 1e-13);
    (r.value.powf(1.0 / p), r.converged)
}

/// Checks `‖P_t g‖_Q ≤ ‖g‖_P` on `γ₁`. The residual is `ratio - 1`; extras
/// record whether `(P, Q, t)` lies in the admissible region
/// `Q - 1 ≤ e^{2t}(P - 1)`.
pub fn hypercontractivity_verify(p: f64, q: f64, t: f64, g: &HyperTest, tol: f64) -> Result<CheckReport> {
    let start = Instant::now();
    if !(p > 1.0 && q > 1.0 && t >= 0.0) {
        return Err(Error::usage(format!("need P, Q > 1 and t >= 0, got ({p}, {q}, {t})")));
    }
    let admissible = q - 1.0 <= (2.0 * t).exp() * (p - 1.0) * (1.0 + 1e-15);
    let (ratio, converged) = match g {
        HyperTest::Exp { c } => (exp_log_ratio(p, q, t, *c).exp(), true),
        HyperTest::General(g) => {
            let rule = GaussHermite::new(DEFAULT_ORDER);
            let (e, s) = ((-t).exp(), (-(-2.0 * t).exp_m1()).sqrt());
            let ptg = |x: f64| rule.expect(|y| g(e * x + s * y));
            let (num, c1) = lp_norm(ptg, q);
            let (den, c2) = lp_norm(|x| g(x), p);
            (num / den, c1 && c2)
        }
    };
    let mut r = CheckReport::scalar(format!("hypercontractivity[{g:?}]"), ratio - 1.0, tol)
        .with_extra("ratio", ratio)
        .with_extra("admissible", f64::from(u8::from(admissible)));
    if !ratio.is_finite() || !converged {
        r.verdict = Verdict::Inconclusive;
        r.note("norm overflow or unconverged quadrature");
    }
    Ok(r.timed(start))
}

/// `γ₂{(x, y): x ∈ A, px + √(1-p²) y ∈ B}` as a one-dimensional integral
/// over `x ∈ A`.
pub fn noise_stability(p: f64, a: &IntervalSet, b: &IntervalSet) -> Result<(f64, f64)> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::usage(format!("correlation must lie in (0, 1), got {p}")));
    }
    let s = (1.0 - p * p).sqrt();
    let mut total = 0.0;
    let mut error = 0.0;
    for &(lo, hi) in a.parts() {
        let r = integrate(
            |x| {
                let inner: f64 = b.parts().iter().map(|&(l, h)| gaussian_interval((l - p * x) / s, (h - p * x) / s)).sum();
                norm_pdf(x) * inner
            },
            lo,
            hi,
            1e-15,
            1e-13,
        );
        total += r.value;
        error += r.error;
    }
    Ok((total, error))
}

/// Checks `lhs ≤ 𝔹(γ(A), γ(B)) + tol`; `equality_gap` records `rhs - lhs`.
pub fn borell_stability_verify(p: f64, a: &IntervalSet, b: &IntervalSet, tol: f64) -> Result<CheckReport> {
    let start = Instant::now();
    let (lhs, err) = noise_stability(p, a, b)?;
    let rhs = BorellB::new(p)?.value_closed(a.gaussian_measure(), b.gaussian_measure())?;
    Ok(CheckReport::scalar(format!("borell-stability[p={p}]"), lhs - rhs, tol)
        .with_extra("lhs", lhs)
        .with_extra("rhs", rhs)
        .with_extra("equality_gap", rhs - lhs)
        .with_extra("quad_error", err)
        .timed(start))
}

/// Grid parameters for [`ehrhard_pl_verify`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlOptions {
    pub delta: f64,
    pub radius: f64,
    pub lift: Lift,
    /// Mollification width of indicator-like data, recorded in the report.
    pub mollifier: f64,
}

impl Default for PlOptions {
    fn default() -> Self {
        Self {
            delta: 1e-3,
            radius: 8.0,
            lift: Lift::Fixed(0.0),
            mollifier: 0.0,
        }
    }
}

/// Functional Ehrhard (Gaussian profile) or Prékopa–Leindler (exp profile)
/// on `γ₁` for two data: with `h` the grid sup-convolution, checks
/// `Φ⁻¹(∫h dγ) ≥ Σ b_j Φ⁻¹(∫f_j dγ) - tol`. The residual is `rhs - lhs`.
pub fn ehrhard_pl_verify(
    profile: &ProfileFunction,
    b: [f64; 2],
    f: [&dyn Datum; 2],
    opts: PlOptions,
    tol: f64,
) -> Result<CheckReport> {
    let start = Instant::now();
    match profile {
        ProfileFunction::Exp => {
            if (b[0] + b[1] - 1.0).abs() > 1e-12 {
                return Err(Error::precondition(format!("exp profile needs b_1 + b_2 = 1, got {b:?}")));
            }
        }
        _ => {
            construct_c_for_b(&b)?;
        }
    }
    let (lo, hi) = profile.value_range();
    for (j, d) in f.iter().enumerate() {
        let (a, c) = d.range();
        if a < lo || c > hi {
            return Err(Error::usage(format!("datum {j} leaves the value range of the {} profile", profile.name())));
        }
    }
    let sc = sup_convolution(profile, b, f, opts.delta, opts.radius, opts.lift)?;
    let h = sc.datum()?;
    let rule = GaussHermite::new(DEFAULT_ORDER);
    let mass = |d: &dyn Datum| {
        if d.exact_smoothing() {
            d.smoothed(0.0, 1.0, &rule)
        } else {
            gaussian_expect(|x| d.value(x), 1e-13).value
        }
    };
    let lhs = extended_quantile(profile, mass(&h))?;
    let rhs = b[0] * extended_quantile(profile, mass(f[0]))? + b[1] * extended_quantile(profile, mass(f[1]))?;
    let mut r = CheckReport::scalar(format!("{}-pl[b={},{}]", profile.name(), b[0], b[1]), rhs - lhs, tol)
        .with_extra("lhs", lhs)
        .with_extra("rhs", rhs)
        .with_extra("gap", lhs - rhs)
        .with_extra("eps_h", sc.eps_h)
        .with_extra("delta", opts.delta)
        .with_extra("mollifier", opts.mollifier);
    r.grid = sc.knots.len();
    r.settle();
    Ok(r.timed(start))
}

/// `γ₁(A + [-t, t]) ≥ Φ(Φ⁻¹(γ₁(A)) + t) - tol` for each `t`; the residual is
/// the worst shortfall, `min_gap` the smallest surplus.
pub fn gaussian_isoperimetry_check(a: &IntervalSet, t_values: &[f64], tol: f64) -> Result<CheckReport> {
    let start = Instant::now();
    let m = a.gaussian_measure();
    let base = if m <= 0.0 {
        f64::NEG_INFINITY
    } else if m >= 1.0 {
        f64::INFINITY
    } else {
        norm_inv(m)?
    };
    let mut worst = f64::NEG_INFINITY;
    let mut argmax = Vec::new();
    for &t in t_values {
        let grown = a.dilate(t)?.gaussian_measure();
        let bound = norm_cdf(base + t);
        let short = bound - grown;
        if short > worst {
            worst = short;
            argmax = vec![t];
        }
    }
    let mut r = CheckReport::scalar("gaussian-isoperimetry", worst, tol).with_extra("min_gap", -worst);
    r.grid = t_values.len();
    r.argmax = argmax;
    r.settle();
    Ok(r.timed(start))
}

/// Measure of `λU + (1-λ)V` from a grid sup-convolution of the indicators.
fn grid_minkowski_measure(u: &IntervalSet, v: &IntervalSet, lambda: f64, delta: f64) -> f64 {
    let cells = |s: &IntervalSet, scale: f64| -> Vec<i64> {
        // Cell i covers [iΔ, (i+1)Δ) in the scaled coordinate.
        let mut out = Vec::new();
        for &(a, b) in s.parts() {
            let lo = (scale * a / delta).floor() as i64;
            let hi = (scale * b / delta).ceil() as i64;
            out.extend(lo..hi);
        }
        out
    };
    let cu = cells(u, lambda);
    let cv = cells(v, 1.0 - lambda);
    if cu.is_empty() || cv.is_empty() {
        return 0.0;
    }
    let (u0, u1) = (cu[0], *cu.last().expect("non-empty"));
    let (v0, v1) = (cv[0], *cv.last().expect("non-empty"));
    let mut hit = vec![false; (u1 - u0 + v1 - v0 + 2) as usize];
    for &i in &cu {
        for &j in &cv {
            hit[(i - u0 + j - v0) as usize] = true;
        }
    }
    // Each hit cell stands for one Δ of the sum; the sum of two half-open
    // cells spans two, so the count undercounts by at most one cell.
    (hit.iter().filter(|h| **h).count() as f64 + 1.0) * delta
}

/// `|λU + (1-λ)V| ≥ |U|^λ |V|^{1-λ}` on the line, with the sum measured by
/// grid sup-convolution at step `delta`. `exact_gap` compares the grid
/// measure with exact interval arithmetic.
pub fn brunn_minkowski_check(u: &IntervalSet, v: &IntervalSet, lambdas: &[f64], delta: f64, tol: f64) -> Result<CheckReport> {
    let start = Instant::now();
    if u.is_empty() || v.is_empty() {
        return Err(Error::usage("Brunn–Minkowski needs non-empty sets"));
    }
    if u.parts().iter().chain(v.parts()).any(|(a, b)| !a.is_finite() || !b.is_finite()) {
        return Err(Error::usage("Brunn–Minkowski needs bounded sets"));
    }
    let mut worst = f64::NEG_INFINITY;
    let mut grid_err: f64 = 0.0;
    let mut argmax = Vec::new();
    for &l in lambdas {
        if !(l > 0.0 && l < 1.0) {
            return Err(Error::usage(format!("lambda must lie in (0, 1), got {l}")));
        }
        let bound = u.lebesgue_measure().powf(l) * v.lebesgue_measure().powf(1.0 - l);
        let grid = grid_minkowski_measure(u, v, l, delta);
        let exact = u.scale(l)?.minkowski_sum(&v.scale(1.0 - l)?)?.lebesgue_measure();
        grid_err = grid_err.max((grid - exact).abs());
        if bound - grid > worst {
            worst = bound - grid;
            argmax = vec![l];
        }
    }
    let mut r = CheckReport::scalar("brunn-minkowski", worst, tol).with_extra("exact_gap", grid_err);
    r.grid = lambdas.len();
    r.argmax = argmax;
    r.settle();
    Ok(r.timed(start))
}

/// `[[B_uu, pB_uv], [pB_uv, B_vv]]`.
pub fn borell_core(b: &BorellB, u: f64, v: f64) -> Result<SymMatrix> {
    let h = b.hessian(&[u, v])?;
    let p = b.p();
    SymMatrix::from_rows(&[vec![h.get(0, 0), p * h.get(0, 1)], vec![p * h.get(0, 1), h.get(1, 1)]])
}

/// Largest deviation between the spectrum of `core ⊗ I_n` and the core
/// spectrum repeated `n` times, and whether the two NSD verdicts agree.
pub fn kron_spectrum_gap(core: &SymMatrix, n: usize, tol: f64) -> (f64, bool) {
    let big = core.kron_identity(n).eigenvalues();
    let mut want: Vec<f64> = core.eigenvalues().into_iter().flat_map(|v| std::iter::repeat_n(v, n)).collect();
    want.sort_by(f64::total_cmp);
    let gap = big.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let agree = is_nsd(core, tol).nsd == is_nsd(&core.kron_identity(n), tol).nsd;
    (gap, agree)
}

/// Tensorization of the Borell core on a grid of `(u, v)`.
pub fn tensorization_check(p: f64, n: usize, grid: &GridSpec, tol: f64) -> Result<CheckReport> {
    if !(1..=4).contains(&n) {
        return Err(Error::usage(format!("tensor power must lie in 1..=4, got {n}")));
    }
    let b = BorellB::new(p)?;
    crate::report::sweep(format!("tensorization[p={p},n={n}]"), &grid.points(), tol, |x| {
        let core = borell_core(&b, x[0], x[1])?;
        let (gap, agree) = kron_spectrum_gap(&core, n, 1e-8);
        Ok(Some(
            crate::report::PointEval::new(if agree { gap } else { f64::INFINITY })
                .with("core_max_eigenvalue", core.max_eigenvalue()),
        ))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::{Constant, GaussianBump, MollifiedInterval};

    #[test]
    fn hypercontractive_boundary_and_violation() {
        for t in [0.2f64, 0.5] {
            let p = 2.0;
            let q = 1.0 + (2.0 * t).exp() * (p - 1.0);
            for c in [0.5, 1.0, 2.0] {
                let r = hypercontractivity_verify(p, q, t, &HyperTest::Exp { c }, 1e-6).unwrap();
                assert!((r.extra("ratio").unwrap() - 1.0).abs() <= 1e-12);
            }
            let bad = 1.0 + 1.5 * (2.0 * t).exp() * (p - 1.0);
            let r = hypercontractivity_verify(p, bad, t, &HyperTest::Exp { c: 1.0 }, 1e-6).unwrap();
            assert!(r.extra("ratio").unwrap() > 1.0 + 1e-4);
            assert!(!r.passed());
        }
    }

    #[test]
    fn closed_form_matches_quadrature() {
        let (p, q, t, c) = (1.5, 1.8, 0.3, 0.7);
        let g = HyperTest::General(Arc::new(move |x| (c * x).exp()));
        let quad = hypercontractivity_verify(p, q, t, &g, 1e-6).unwrap();
        let exact = exp_log_ratio(p, q, t, c).exp();
        assert!((quad.extra("ratio").unwrap() - exact).abs() < 1e-9, "{} {exact}", quad.extra("ratio").unwrap());
    }

    #[test]
    fn constants_give_equality() {
        let g = HyperTest::General(Arc::new(|_| 3.0));
        let r = hypercontractivity_verify(2.0, 3.0, 0.4, &g, 1e-9).unwrap();
        assert!((r.extra("ratio").unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn borell_stability_examples() {
        let ray = IntervalSet::left_ray(0.0);
        let r = borell_stability_verify(0.5, &ray, &ray, 1e-10).unwrap();
        assert!((r.extra("lhs").unwrap() - (0.25 + 1.0 / 12.0)).abs() < 1e-12);
        assert!(r.extra("equality_gap").unwrap().abs() < 1e-12);
        let b = IntervalSet::new(vec![(-0.3, 0.4), (1.0, 2.0)]).unwrap();
        let r = borell_stability_verify(0.7, &IntervalSet::real_line(), &b, 1e-12).unwrap();
        assert!((r.extra("lhs").unwrap() - b.gaussian_measure()).abs() < 1e-12);
        assert!(r.extra("equality_gap").unwrap().abs() < 1e-12);
        let a = IntervalSet::interval(-1.0, 1.0).unwrap();
        let b = IntervalSet::interval(0.0, 2.0).unwrap();
        let r = borell_stability_verify(0.3, &a, &b, 1e-10).unwrap();
        assert!(r.passed());
        assert!(r.extra("equality_gap").unwrap() > 1e-3);
    }

    #[test]
    fn stability_is_monotone_in_a() {
        let b = IntervalSet::interval(-0.5, 1.5).unwrap();
        let mut prev = 0.0;
        for k in 1..8 {
            let a = IntervalSet::interval(-0.3 * k as f64, 0.2 * k as f64).unwrap();
            let (v, _) = noise_stability(0.6, &a, &b).unwrap();
            assert!(v >= prev - 1e-15);
            prev = v;
        }
    }

    #[test]
    fn ehrhard_rays_nearly_equal() {
        let w = 0.02;
        let f1 = MollifiedInterval::ray(0.3, w).unwrap();
        let f2 = MollifiedInterval::ray(-0.5, w).unwrap();
        let opts = PlOptions {
            mollifier: w,
            ..PlOptions::default()
        };
        let r = ehrhard_pl_verify(&ProfileFunction::Gaussian, [0.5, 0.5], [&f1, &f2], opts, 1e-9).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!(r.extra("gap").unwrap().abs() <= 2e-3, "{r:?}");
    }

    #[test]
    fn ehrhard_constants_and_exp_profile() {
        let c = Constant(0.3);
        let r = ehrhard_pl_verify(&ProfileFunction::Gaussian, [0.5, 0.5], [&c, &c], PlOptions::default(), 1e-12).unwrap();
        assert!(r.extra("gap").unwrap().abs() < 1e-12);
        let f1 = GaussianBump::new(0.2, 0.8, 1.5, 0.2).unwrap();
        let f2 = GaussianBump::new(-0.7, 1.3, 0.6, 0.4).unwrap();
        let r = ehrhard_pl_verify(&ProfileFunction::Exp, [0.4, 0.6], [&f1, &f2], PlOptions::default(), 1e-9).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!(r.extra("gap").unwrap() > 0.0);
        assert!(ehrhard_pl_verify(&ProfileFunction::Exp, [0.4, 0.4], [&f1, &f2], PlOptions::default(), 1e-9).is_err());
        assert!(ehrhard_pl_verify(&ProfileFunction::Gaussian, [0.2, 0.2], [&c, &c], PlOptions::default(), 1e-9).is_err());
    }

    #[test]
    fn isoperimetry_examples() {
        let r = gaussian_isoperimetry_check(&IntervalSet::left_ray(0.4), &[0.0, 0.3, 1.0, 2.5], 1e-9).unwrap();
        assert!(r.passed());
        assert!(r.max_residual.abs() <= 1e-9);
        let r = gaussian_isoperimetry_check(&IntervalSet::interval(-1.0, 1.0).unwrap(), &[0.5], 0.0).unwrap();
        assert!(r.extra("min_gap").unwrap() > 1e-4);
        let r = gaussian_isoperimetry_check(&IntervalSet::interval(-1.0, 1.0).unwrap(), &[0.0], 1e-15).unwrap();
        assert!(r.max_residual.abs() < 1e-15);
    }

    #[test]
    fn brunn_minkowski_intervals() {
        let u = IntervalSet::interval(0.0, 1.0).unwrap();
        let v = IntervalSet::new(vec![(2.0, 2.5), (3.0, 5.0)]).unwrap();
        let r = brunn_minkowski_check(&u, &v, &[0.1, 0.3, 0.5, 0.9], 1e-3, 1e-3).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!(r.extra("exact_gap").unwrap() <= 3e-3);
    }

    #[test]
    fn tensorization_examples() {
        let (gap, agree) = kron_spectrum_gap(&SymMatrix::identity(2).scaled(-1.0), 3, 1e-12);
        assert!(gap < 1e-15 && agree);
        let b = BorellB::new(0.5).unwrap();
        let core = borell_core(&b, 0.3, 0.7).unwrap();
        let (gap, agree) = kron_spectrum_gap(&core, 3, 1e-8);
        assert!(gap <= 1e-10 && agree);
        let bad = SymMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, -1.0]]).unwrap();
        assert!(!is_nsd(&bad.kron_identity(2), 1e-12).nsd);
        let grid = GridSpec::uniform(2, 0.05, 0.95, 7).unwrap();
        assert!(tensorization_check(0.5, 2, &grid, 1e-10).unwrap().passed());
    }
}
