//! The Gaussian integral inequality `B(∫u_j dγ₁) ≥ ∫ B(u_j(a_j·x)) dγ_k` and a
//! witness search for its failure.

use std::sync::Arc;
use std::time::Instant;

use nalgebra::DVector;

use crate::catalog::{Candidate, DEFAULT_MARGIN};
use crate::error::{Error, Result};
use crate::flows::{clamped_value, Datum, GaussianBump, Smoothness};
use crate::linalg::{modified_hessian, psd_sqrt, ColumnSystem, SymMatrix};
use crate::quadrature::{gaussian_expect, gaussian_expect_2d, GaussHermite};
use crate::report::{CheckReport, Verdict};

/// Quadrature settings for [`verify_gmc`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GmcOptions {
    /// Starting Gauss–Hermite order; doubled until two orders agree.
    pub order: usize,
    /// Target agreement between successive orders (and adaptive tolerance).
    pub quad_tol: f64,
}

impl Default for GmcOptions {
    fn default() -> Self {
        Self {
            order: 32,
            quad_tol: 1e-11,
        }
    }
}

/// Both sides of the inequality and the quadrature diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GmcSides {
    /// `∫ B(u_j(<C^{1/2}a_j, y>)) dγ_k(y)`, the side bounded above.
    pub integral: f64,
    /// `B(∫u_j(√s_j z) dγ₁)`, `s_j = <Ca_j, a_j>`.
    pub bound: f64,
    pub error: f64,
    pub converged: bool,
    pub order: usize,
    pub clamps: usize,
}

impl GmcSides {
    pub fn delta(&self) -> f64 {
        self.bound - self.integral
    }
}

fn max_order(k: usize) -> usize {
    match k {
        1 => 512,
        2 => 256,
        3 => 48,
        _ => 16,
    }
}

pub(crate) fn check_data(b: &dyn Candidate, data: &[Arc<dyn Datum>]) -> Result<()> {
    if data.len() != b.arity() {
        return Err(Error::usage(format!("{} takes {} data, got {}", b.name(), b.arity(), data.len())));
    }
    let dom = b.domain();
    for (j, d) in data.iter().enumerate() {
        let (lo, hi) = d.range();
        if lo < dom.lo[j] || hi > dom.hi[j] {
            return Err(Error::usage(format!(
                "datum {j} ranges over [{lo}, {hi}], outside axis [{}, {}] of {}",
                dom.lo[j],
                dom.hi[j],
                b.name()
            )));
        }
    }
    Ok(())
}

/// Computes both sides of the inequality.
pub fn gmc_sides(
    b: &dyn Candidate,
    sys: &ColumnSystem,
    c: &SymMatrix,
    data: &[Arc<dyn Datum>],
    opts: GmcOptions,
) -> Result<GmcSides> {
    check_data(b, data)?;
    if b.arity() != sys.n() || c.dim() != sys.k() {
        return Err(Error::usage("candidate, system and C have inconsistent dimensions"));
    }
    let k = sys.k();
    let speeds = sys.speeds(c)?;
    if let Some(j) = speeds.iter().position(|s| !(*s > 0.0)) {
        return Err(Error::precondition(format!("<C a_{j}, a_{j}> = {} is not positive", speeds[j])));
    }
    let root = psd_sqrt(c)?;
    let dirs: Vec<Vec<f64>> = (0..sys.n())
        .map(|j| {
            let a = DVector::from_column_slice(&sys.column(j));
            (root.as_matrix() * a).iter().copied().collect()
        })
        .collect();
    let rule0 = GaussHermite::new(8);
    let means: Vec<f64> = data
        .iter()
        .zip(&speeds)
        .map(|(d, &s)| {
            if d.exact_smoothing() {
                d.smoothed(0.0, s, &rule0)
            } else {
                gaussian_expect(|z| d.value(s.sqrt() * z), opts.quad_tol).value
            }
        })
        .collect();
    let bound = clamped_value(b, &means, DEFAULT_MARGIN)?;

    let clamps = std::cell::Cell::new(bound.clamps);
    let first_err: std::cell::RefCell<Option<Error>> = std::cell::RefCell::new(None);
    let integrand = |y: &[f64]| -> f64 {
        let u: Vec<f64> = data
            .iter()
            .zip(&dirs)
            .map(|(d, dir)| d.value(dir.iter().zip(y).map(|(a, y)| a * y).sum()))
            .collect();
        match clamped_value(b, &u, DEFAULT_MARGIN) {
            Ok(v) => {
                clamps.set(clamps.get() + v.clamps);
                v.value
            }
            Err(e) => {
                first_err.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    };

    let rough = data.iter().any(|d| d.smoothness() != Smoothness::Smooth);
    let (integral, error, converged, order) = if rough && k <= 2 {
        let r = if k == 1 {
            gaussian_expect(|y| integrand(&[y]), opts.quad_tol)
        } else {
            gaussian_expect_2d(|x, y| integrand(&[x, y]), opts.quad_tol)
        };
        (r.value, r.error, r.converged, 0)
    } else {
        let mut order = opts.order.max(2);
        let mut prev = GaussHermite::new(order).expect_nd(k, integrand);
        loop {
            let next_order = order * 2;
            if next_order > max_order(k) {
                break (prev, f64::INFINITY, false, order);
            }
            let next = GaussHermite::new(next_order).expect_nd(k, integrand);
            let diff = (next - prev).abs();
            order = next_order;
            if diff <= opts.quad_tol {
                break (next, diff, true, order);
            }
            prev = next;
        }
    };
    if let Some(e) = first_err.into_inner() {
        return Err(e);
    }
    Ok(GmcSides {
        integral,
        bound: bound.value,
        error,
        converged,
        order,
        clamps: clamps.get(),
    })
}

/// Passes iff `Δ = bound - integral ≥ -tol`; inconclusive when quadrature does not
/// settle.
pub fn verify_gmc(
    b: &dyn Candidate,
    sys: &ColumnSystem,
    c: &SymMatrix,
    data: &[Arc<dyn Datum>],
    opts: GmcOptions,
    tol: f64,
) -> Result<CheckReport> {
    let start = Instant::now();
    let s = gmc_sides(b, sys, c, data, opts)?;
    let mut r = CheckReport::scalar(format!("gmc[{}]", b.name()), -s.delta(), tol)
        .with_extra("delta", s.delta())
        .with_extra("integral", s.integral)
        .with_extra("bound", s.bound)
        .with_extra("quad_error", s.error)
        .with_extra("order", s.order as f64)
        .with_extra("clamps", s.clamps as f64);
    if !s.converged {
        r.verdict = Verdict::Inconclusive;
        r.note("quadrature did not converge within the order budget");
    }
    Ok(r.timed(start))
}

/// Bump family used by the witness searches.
pub const BUMP_WIDTHS: [f64; 3] = [0.5, 1.0, 2.0];
pub const BUMP_CENTERS: [f64; 5] = [-2.0, -1.0, 0.0, 1.0, 2.0];

/// Outcome of [`gmc_converse_search`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Witness {
    pub delta: f64,
    pub width: f64,
    pub center: f64,
}

/// Looks for data `u_j = base_j + ε α_j · bump` with `Δ < -threshold`, `α`
/// the top eigenvector of the modified Hessian at `base`.
///
/// The report passes when such a witness exists (`max_residual` is
/// `min Δ + threshold`, tolerance 0).
pub fn gmc_converse_search(
    b: &dyn Candidate,
    sys: &ColumnSystem,
    c: &SymMatrix,
    base: &[f64],
    eps: f64,
    threshold: f64,
) -> Result<(CheckReport, Option<Witness>)> {
    let start = Instant::now();
    let m = modified_hessian(sys, c, &b.hessian(base)?)?;
    let eig = nalgebra::SymmetricEigen::new(m.as_matrix().clone());
    let (top, lam) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    let alpha: Vec<f64> = eig.eigenvectors.column(top).iter().copied().collect();
    let mut best: Option<Witness> = None;
    for &width in &BUMP_WIDTHS {
        for &center in &BUMP_CENTERS {
            let data: Vec<Arc<dyn Datum>> = base
                .iter()
                .zip(&alpha)
                .map(|(&u0, &a)| Ok(Arc::new(GaussianBump::new(center, width, eps * a, u0)?) as Arc<dyn Datum>))
                .collect::<Result<_>>()?;
            let s = gmc_sides(b, sys, c, &data, GmcOptions::default())?;
            let d = s.delta();
            if best.is_none_or(|w| d < w.delta) {
                best = Some(Witness { delta: d, width, center });
            }
        }
    }
    let w = best.expect("non-empty bump family");
    let mut r = CheckReport::scalar(format!("gmc-converse[{}]", b.name()), w.delta + threshold, 0.0)
        .with_extra("min_delta", w.delta)
        .with_extra("witness_width", w.width)
        .with_extra("witness_center", w.center)
        .with_extra("max_eigenvalue", lam);
    r.grid = BUMP_WIDTHS.len() * BUMP_CENTERS.len();
    r.settle();
    let found = w.delta < -threshold;
    Ok((r.timed(start), found.then_some(w)))
}
