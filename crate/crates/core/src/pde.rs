//! Pointwise checkers for the two Bellman PDE families, their reduced forms
//! for graph candidates `B = x_n - H`, and the planar witness search that
//! produces the matrix `C` for a coefficient vector `b`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::Candidate;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::linalg::{
    kernel_projection, minors_vanish, modified_hessian, numerical_rank, scale_columns, ColumnSystem, SymMatrix,
};
use crate::profile::ProfileFunction;
use crate::report::{sweep, CheckReport, PointEval};

/// Partials smaller than this are treated as vanishing.
pub const VANISHING_PARTIAL: f64 = 1e-10;

fn check_dims(b: &dyn Candidate, sys: &ColumnSystem, c: &SymMatrix) -> Result<()> {
    if b.arity() != sys.n() {
        return Err(Error::usage(format!(
            "{} has arity {} but the system has {} columns",
            b.name(),
            b.arity(),
            sys.n()
        )));
    }
    if c.dim() != sys.k() {
        return Err(Error::usage(format!("C is {}x{}, expected {}x{}", c.dim(), c.dim(), sys.k(), sys.k())));
    }
    Ok(())
}

/// First-type check: `A*CA • Hess B ≤ 0` with vanishing determinant.
///
/// The residual at a point is `max(λ_max⁺, |det| / (1 + Π‖row‖))`; the
/// report's extras carry the worst eigenvalue and the worst relative
/// determinant separately.
pub fn check_first_type(
    b: &dyn Candidate,
    sys: &ColumnSystem,
    c: &SymMatrix,
    grid: &GridSpec,
    tol: f64,
) -> Result<CheckReport> {
    check_dims(b, sys, c)?;
    sweep(format!("first-type[{}]", b.name()), &grid.points(), tol, |x| {
        let m = modified_hessian(sys, c, &b.hessian(x)?)?;
        let lam = m.max_eigenvalue();
        let det = m.relative_determinant();
        Ok(Some(
            PointEval::new(lam.max(0.0).max(det))
                .with("worst_eigenvalue", lam)
                .with("worst_determinant", det),
        ))
    })
}

/// Second-type check: `P (A*CA • Hess B) P ≤ 0` and all `(n-k)`-minors of
/// the projected matrix vanish, with `P` the projector onto `ker AD`.
pub fn check_second_type(
    b: &dyn Candidate,
    sys: &ColumnSystem,
    c: &SymMatrix,
    grid: &GridSpec,
    tol: f64,
) -> Result<CheckReport> {
    check_second_type_at(b, sys, c, &grid.points(), tol)
}

/// [`check_second_type`] on an explicit list of points.
pub fn check_second_type_at(
    b: &dyn Candidate,
    sys: &ColumnSystem,
    c: &SymMatrix,
    points: &[Vec<f64>],
    tol: f64,
) -> Result<CheckReport> {
    check_dims(b, sys, c)?;
    let speeds = sys.speeds(c)?;
    if let Some(j) = speeds.iter().position(|&s| !(s > 0.0)) {
        return Err(Error::precondition(format!("<C a_{j}, a_{j}> = {} is not positive", speeds[j])));
    }
    let s = sys.n() - sys.k();
    sweep(format!("second-type[{}]", b.name()), points, tol, |x| {
        let m = modified_hessian(sys, c, &b.hessian(x)?)?;
        let p = kernel_projection(sys, &b.gradient(x)?)?;
        let pmp = p.compress(&m)?;
        let lam = pmp.max_eigenvalue();
        let minor = if s == 0 { 0.0 } else { minors_vanish(&pmp, s, tol)?.worst };
        let rank = numerical_rank_tol(&pmp, tol);
        Ok(Some(
            PointEval::new(lam.max(0.0).max(minor))
                .with("worst_eigenvalue", lam)
                .with("worst_minor", minor)
                .with("max_rank", rank as f64),
        ))
    })
}

fn numerical_rank_tol(m: &SymMatrix, tol: f64) -> usize {
    m.eigenvalues().iter().filter(|v| v.abs() > tol).count()
}

/// `Σ_j B_jj <Ca_j,a_j> - Σ_{i,j} B_ij B_i B_j <Ca_i,a_j> <(AD²A*)⁻¹ a_i, a_j>`,
/// the trace of the projected modified Hessian when `k = n - 1`.
pub fn trace_condition(b: &dyn Candidate, sys: &ColumnSystem, c: &SymMatrix, x: &[f64]) -> Result<f64> {
    check_dims(b, sys, c)?;
    if sys.k() + 1 != sys.n() {
        return Err(Error::usage(format!("trace condition needs k = n - 1, got k={}, n={}", sys.k(), sys.n())));
    }
    let g = b.gradient(x)?;
    let h = b.hessian(x)?;
    let ad = scale_columns(sys.matrix(), &g);
    if numerical_rank(&ad) < sys.k() {
        return Err(Error::precondition(format!("AD is rank deficient at {x:?}")));
    }
    let gram_inv = (&ad * ad.transpose())
        .try_inverse()
        .ok_or_else(|| Error::precondition(format!("AD²A* is singular at {x:?}")))?;
    let ca = sys.gram(c)?;
    let ga: DMatrix<f64> = sys.matrix().transpose() * gram_inv * sys.matrix();
    let n = sys.n();
    let mut t = 0.0;
    for j in 0..n {
        t += h.get(j, j) * ca[(j, j)];
    }
    for i in 0..n {
        for j in 0..n {
            t -= h.get(i, j) * g[i] * g[j] * ca[(i, j)] * ga[(i, j)];
        }
    }
    Ok(t)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HMode {
    /// `r ≥ -tol` everywhere.
    Inequality,
    /// `|r| ≤ tol` everywhere.
    Equality,
}

/// `Σ_{i,j} H_ij a_ni a_nj c_ij / (H_i H_j)`, or `None` when a partial vanishes.
pub fn reduced_h_residual(h: &dyn Candidate, a_n: &[f64], c: &SymMatrix, x: &[f64]) -> Result<Option<f64>> {
    let k = h.arity();
    if a_n.len() != k || c.dim() != k {
        return Err(Error::usage(format!("H has arity {k}; a_n and C must match")));
    }
    let g = h.gradient(x)?;
    if g.iter().any(|v| v.abs() < VANISHING_PARTIAL) {
        return Ok(None);
    }
    let hh = h.hessian(x)?;
    let mut r = 0.0;
    for i in 0..k {
        for j in 0..k {
            r += hh.get(i, j) * a_n[i] * a_n[j] * c.get(i, j) / (g[i] * g[j]);
        }
    }
    Ok(Some(r))
}

/// Reduced condition for `B = x_n - H`: residual `r(x)` as in
/// [`reduced_h_residual`]. Points with a vanishing partial are skipped.
pub fn reduced_h_condition(
    h: &dyn Candidate,
    a_n: &[f64],
    c: &SymMatrix,
    grid: &GridSpec,
    tol: f64,
    mode: HMode,
) -> Result<CheckReport> {
    let mut report = sweep(format!("reduced-H[{}]", h.name()), &grid.points(), tol, |x| {
        Ok(reduced_h_residual(h, a_n, c, x)?.map(|r| {
            let viol = match mode {
                HMode::Inequality => -r,
                HMode::Equality => r.abs(),
            };
            PointEval::new(viol).with("max_r", r).with("neg_min_r", -r)
        }))
    })?;
    if let Some(v) = report.extras.remove("neg_min_r") {
        report.extras.insert("min_r".into(), -v);
    }
    Ok(report)
}

/// `(1-α²-β²) H_x H_y H_xy + α² H_y² H_xx + β² H_x² H_yy`.
pub fn glavnoe_residual(h: &dyn Candidate, alpha: f64, beta: f64, x: &[f64]) -> Result<f64> {
    let g = h.gradient(x)?;
    let hh = h.hessian(x)?;
    let (hx, hy) = (g[0], g[1]);
    Ok((1.0 - alpha * alpha - beta * beta) * hx * hy * hh.get(0, 1)
        + alpha * alpha * hy * hy * hh.get(0, 0)
        + beta * beta * hx * hx * hh.get(1, 1))
}

/// The `C` matching `(α, β)` in the two-variable reduced condition:
/// unit diagonal and `c₁₂ = (1-α²-β²)/(2αβ)`.
pub fn glavnoe_c(alpha: f64, beta: f64) -> Result<SymMatrix> {
    if alpha == 0.0 || beta == 0.0 {
        return Err(Error::usage("alpha and beta must be nonzero"));
    }
    let c12 = (1.0 - alpha * alpha - beta * beta) / (2.0 * alpha * beta);
    SymMatrix::from_rows(&[vec![1.0, c12], vec![c12, 1.0]])
}

/// Two-variable inequality `g ≥ -tol` with `g` from [`glavnoe_residual`].
///
/// Requires `|α| + |β| ≥ 1` and `||α| - |β|| ≤ 1`. The extras record the
/// largest discrepancy between `g` and `H_x² H_y² r`, where `r` is the
/// reduced residual for `a_n = (α, β)` and [`glavnoe_c`].
pub fn glavnoe_check(h: &dyn Candidate, alpha: f64, beta: f64, grid: &GridSpec, tol: f64) -> Result<CheckReport> {
    if h.arity() != 2 {
        return Err(Error::usage("the two-variable condition needs H of arity 2"));
    }
    let (a, b) = (alpha.abs(), beta.abs());
    if a + b < 1.0 {
        return Err(Error::precondition(format!("|alpha| + |beta| = {} < 1", a + b)));
    }
    if (a - b).abs() > 1.0 {
        return Err(Error::precondition(format!("||alpha| - |beta|| = {} > 1", (a - b).abs())));
    }
    let c = glavnoe_c(alpha, beta)?;
    sweep(format!("glavnoe[{}]", h.name()), &grid.points(), tol, |x| {
        let g = h.gradient(x)?;
        if g.iter().any(|v| v.abs() < VANISHING_PARTIAL) {
            return Ok(None);
        }
        let gl = glavnoe_residual(h, alpha, beta, x)?;
        let r = reduced_h_residual(h, &[alpha, beta], &c, x)?.unwrap_or(0.0);
        let scaled = r * g[0] * g[0] * g[1] * g[1];
        let sign_mismatch = if gl.abs() > tol && scaled.abs() > tol && gl.signum() != scaled.signum() {
            1.0
        } else {
            0.0
        };
        Ok(Some(
            PointEval::new(-gl)
                .with("max_g", gl)
                .with("factor_mismatch", (gl - scaled).abs() / (1.0 + gl.abs()))
                .with("sign_mismatch", sign_mismatch),
        ))
    })
}

/// Weights for the log-derivative condition: `w₀ = |Σ b_j v_j|²`, `w_j = |v_j|²`.
#[derive(Clone, Debug, PartialEq)]
pub struct LogdevWeights {
    pub w0: f64,
    pub w: Vec<f64>,
}

impl LogdevWeights {
    /// The normalized case `|v_j| = 1`, `|Σ b_j v_j| = 1`.
    pub fn unit(k: usize) -> Self {
        Self { w0: 1.0, w: vec![1.0; k] }
    }
}

/// Checks `w₀ (log φ)'(Σ b_j y_j) ≥ Σ b_j w_j (log φ)'(y_j) - tol` at each sample.
pub fn logdev_check(
    profile: &ProfileFunction,
    b: &[f64],
    weights: &LogdevWeights,
    samples: &[Vec<f64>],
    tol: f64,
) -> Result<CheckReport> {
    if weights.w.len() != b.len() {
        return Err(Error::usage("weights and coefficients differ in length"));
    }
    sweep(format!("logdev[{}]", profile.name()), samples, tol, |y| {
        if y.len() != b.len() {
            return Err(Error::usage("sample dimension differs from the coefficient count"));
        }
        let s: f64 = b.iter().zip(y).map(|(b, y)| b * y).sum();
        if !profile.in_support(s) || y.iter().any(|&v| !profile.in_support(v)) {
            return Ok(None);
        }
        let lhs = weights.w0 * profile.log_density_derivative(s);
        let rhs: f64 = b
            .iter()
            .zip(&weights.w)
            .zip(y)
            .map(|((b, w), &y)| b * w * profile.log_density_derivative(y))
            .sum();
        Ok(Some(PointEval::new(rhs - lhs)))
    })
}

/// Why no admissible `C` exists for a coefficient vector.
#[derive(Clone, Debug, PartialEq, Error)]
pub enum A1Infeasible {
    #[error("coefficient vector must be non-empty with positive entries")]
    NonPositive,
    #[error("sum of b_j is {sum} < 1 (condition 1 <= sum_j b_j fails)")]
    SumBelowOne { sum: f64 },
    #[error("b_{j} - sum_(i != j) b_i = {excess} > 1 (condition b_j - sum_(i != j) b_i <= 1 fails for j = {j})")]
    Dominant { j: usize, excess: f64 },
    #[error("planar witness failed verification (residual {residual})")]
    Verification { residual: f64 },
}

/// Unit vectors `v_j` in the plane with `|Σ b_j v_j| = 1`, and `C = VᵀV`.
#[derive(Clone, Debug, PartialEq)]
pub struct A1Witness {
    pub c: SymMatrix,
    pub vectors: Vec<[f64; 2]>,
}

/// Finds `C ≥ 0` with `c_jj = 1` and `<Cb, b> = 1`.
///
/// The vectors `b_j v_j` together with a closing side of length one form a
/// planar polygon; it is realised as a cyclic polygon whose circumradius is
/// found by bisection. Feasibility is exactly the polygon inequality for the
/// side lengths `(b_1, …, b_k, 1)`.
pub fn construct_c_for_b(b: &[f64]) -> std::result::Result<A1Witness, A1Infeasible> {
    if b.is_empty() || b.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(A1Infeasible::NonPositive);
    }
    let sum: f64 = b.iter().sum();
    let eps = 1e-12 * sum.max(1.0);
    if sum < 1.0 - eps {
        return Err(A1Infeasible::SumBelowOne { sum });
    }
    for (j, &bj) in b.iter().enumerate() {
        let excess = bj - (sum - bj);
        if excess > 1.0 + eps {
            return Err(A1Infeasible::Dominant { j, excess });
        }
    }
    let mut sides = b.to_vec();
    sides.push(1.0);
    let vecs = cyclic_polygon(&sides);
    let vectors: Vec<[f64; 2]> = vecs[..b.len()]
        .iter()
        .map(|s| {
            let n = s[0].hypot(s[1]);
            [s[0] / n, s[1] / n]
        })
        .collect();
    let k = b.len();
    let c = SymMatrix::from_fn(k, |i, j| vectors[i][0] * vectors[j][0] + vectors[i][1] * vectors[j][1]);
    let mut cbb = 0.0;
    for i in 0..k {
        for j in 0..k {
            cbb += c.get(i, j) * b[i] * b[j];
        }
    }
    let diag = (0..k).fold(0.0_f64, |m, j| m.max((c.get(j, j) - 1.0).abs()));
    let min_eig = c.eigenvalues()[0];
    let residual = diag.max((cbb - 1.0).abs()).max((-min_eig - 1e-12).max(0.0));
    if residual > 1e-10 {
        return Err(A1Infeasible::Verification { residual });
    }
    Ok(A1Witness { c, vectors })
}

/// Side vectors of a closed planar polygon with the given side lengths,
/// assuming the polygon inequality holds.
fn cyclic_polygon(sides: &[f64]) -> Vec<[f64; 2]> {
    let (imax, &lmax) = sides
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    let total: f64 = sides.iter().sum();
    let rest = total - lmax;
    if rest - lmax <= 1e-12 * total {
        // Degenerate: all sides on one line, the longest opposing the rest.
        return sides
            .iter()
            .enumerate()
            .map(|(i, &l)| if i == imax { [l, 0.0] } else { [-l, 0.0] })
            .collect();
    }
    let angle = |l: f64, r: f64| 2.0 * (l / (2.0 * r)).min(1.0).asin();
    let inside = |r: f64| sides.iter().map(|&l| angle(l, r)).sum::<f64>() - 2.0 * std::f64::consts::PI;
    let outside = |r: f64| {
        sides
            .iter()
            .enumerate()
            .map(|(i, &l)| if i == imax { -angle(l, r) } else { angle(l, r) })
            .sum::<f64>()
    };
    let r0 = 0.5 * lmax;
    let center_inside = inside(r0) >= 0.0;
    let f = |r: f64| if center_inside { inside(r) } else { outside(r) };
    // inside() decreases through zero; outside() increases through zero.
    let sign0 = f(r0) >= 0.0;
    let mut lo = r0;
    let mut hi = r0 * 2.0;
    while (f(hi) >= 0.0) == sign0 && hi < 1e15 * r0 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) >= 0.0) == sign0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r = 0.5 * (lo + hi);
    let mut phi = 0.0_f64;
    let mut out = Vec::with_capacity(sides.len());
    for (i, &l) in sides.iter().enumerate() {
        let th = if !center_inside && i == imax { -angle(l, r) } else { angle(l, r) };
        let (p0, p1) = ([r * phi.cos(), r * phi.sin()], [r * (phi + th).cos(), r * (phi + th).sin()]);
        out.push([p1[0] - p0[0], p1[1] - p0[1]]);
        phi += th;
    }
    out
}

/// `(a-1)(b-1) ≥ p²`.
pub fn hyper_region(a: f64, b: f64, p: f64) -> bool {
    (a - 1.0) * (b - 1.0) >= p * p
}

/// `Q - 1 ≤ e^{2t}(P - 1)`, the same region with `p = e^{-t}`.
pub fn hyper_region_pqt(p_exp: f64, q_exp: f64, t: f64) -> bool {
    q_exp - 1.0 <= (2.0 * t).exp() * (p_exp - 1.0)
}
