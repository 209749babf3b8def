//! Series solutions of `∂f/∂z̄ = f̄`, the hodograph change of variables that
//! links them to separately concave solutions of `c²B₁₁B₂₂ = B₁₂²`, and the
//! parabolic and elliptic reductions of the constant-coefficient equations.
//!
//! Complex numbers cross the public surface as `(re, im)` pairs.

use std::sync::Arc;

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::catalog::Candidate;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::report::{sweep, CheckReport, PointEval};

/// Default truncation order of the Bessel series.
pub const DEFAULT_BESSEL_ORDER: usize = 30;

/// Default step of the finite-difference `∂/∂z̄`.
pub const DEFAULT_DBAR_STEP: f64 = 1e-4;

/// Truncated series `J(r) = Σ_{j≥0} r^j/(j!)²` and its derivatives
/// `J^{(d)}(r) = Σ_{j≥d} r^{j-d}/((j-d)! j!)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BesselJ {
    order: usize,
    inv_fact: Vec<f64>,
}

/// A truncated value and a bound on the omitted terms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BesselValue {
    pub value: f64,
    pub tail: f64,
}

impl BesselJ {
    pub fn new(order: usize) -> Self {
        let mut inv_fact = Vec::with_capacity(order + 3);
        let mut f = 1.0;
        inv_fact.push(1.0);
        for j in 1..=order + 2 {
            f /= j as f64;
            inv_fact.push(f);
        }
        Self { order, inv_fact }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// `J^{(d)}(r)` summed over `j ≤ order`. The tail is the first omitted
    /// term times the geometric factor bounding the rest (infinite when the
    /// ratio test fails).
    pub fn eval(&self, r: f64, d: usize) -> Result<BesselValue> {
        if d > self.order {
            return Err(Error::usage(format!("derivative {d} exceeds truncation order {}", self.order)));
        }
        let mut value = 0.0;
        let mut pow = 1.0;
        for j in d..=self.order {
            value += pow * self.inv_fact[j - d] * self.inv_fact[j];
            pow *= r;
        }
        let m = self.order;
        let first = r.abs().powi((m + 1 - d) as i32) * self.inv_fact[m + 1 - d] * self.inv_fact[m + 1];
        let q = r.abs() / ((m + 2 - d) as f64 * (m + 2) as f64);
        let tail = if q < 1.0 { first / (1.0 - q) } else { f64::INFINITY };
        Ok(BesselValue { value, tail })
    }
}

/// `f(z) = Σ_k c_k J^{(k)}(zz̄) z^k + c̄_k J^{(k+1)}(zz̄) z̄^{k+1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct DbarSolution {
    coeffs: Vec<Complex64>,
    bessel: BesselJ,
}

impl DbarSolution {
    /// `coeffs` are `c_0..c_K`; the Bessel order must be at least `K + 1`.
    pub fn new(coeffs: &[(f64, f64)], order: usize) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::usage("a series solution needs at least c_0"));
        }
        if order < coeffs.len() {
            return Err(Error::usage(format!(
                "Bessel order {order} too small for {} coefficients",
                coeffs.len()
            )));
        }
        Ok(Self {
            coeffs: coeffs.iter().map(|&(re, im)| Complex64::new(re, im)).collect(),
            bessel: BesselJ::new(order),
        })
    }

    /// The solution with a single coefficient `c_index = value`.
    pub fn single(index: usize, value: (f64, f64), order: usize) -> Result<Self> {
        let mut c = vec![(0.0, 0.0); index + 1];
        c[index] = value;
        Self::new(&c, order)
    }

    pub fn coefficients(&self) -> Vec<(f64, f64)> {
        self.coeffs.iter().map(|c| (c.re, c.im)).collect()
    }

    pub fn order(&self) -> usize {
        self.bessel.order()
    }

    fn eval_c(&self, z: Complex64) -> Complex64 {
        let r = z.norm_sqr();
        let zb = z.conj();
        let mut out = Complex64::new(0.0, 0.0);
        let mut zk = Complex64::new(1.0, 0.0);
        let mut zbk1 = zb;
        let mut jk = self.bessel.eval(r, 0).expect("order checked at construction").value;
        for (k, c) in self.coeffs.iter().enumerate() {
            let jk1 = self.bessel.eval(r, k + 1).expect("order checked at construction").value;
            out += c * jk * zk + c.conj() * jk1 * zbk1;
            zk *= z;
            zbk1 *= zb;
            jk = jk1;
        }
        out
    }

    pub fn eval(&self, z: (f64, f64)) -> (f64, f64) {
        let w = self.eval_c(Complex64::new(z.0, z.1));
        (w.re, w.im)
    }
}

/// `(g(x+h) - g(x-h)) / 2h`, Richardson-extrapolated once.
fn richardson_d1<T>(g: impl Fn(f64) -> T, h: f64) -> T
where
    T: std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T> + Copy,
{
    let d = |s: f64| (g(s) - g(-s)) * (0.5 / s);
    let (coarse, fine) = (d(h), d(0.5 * h));
    (fine * 4.0 - coarse) * (1.0 / 3.0)
}

/// `(g(x+h) - 2g(x) + g(x-h)) / h²`, Richardson-extrapolated once.
fn richardson_d2(g: impl Fn(f64) -> f64, h: f64) -> f64 {
    let g0 = g(0.0);
    let d = |s: f64| (g(s) - 2.0 * g0 + g(-s)) / (s * s);
    (4.0 * d(0.5 * h) - d(h)) / 3.0
}

/// `|(f_x + i f_y)/2 - f̄|` at `z` by central differences of step `h`.
pub fn dbar_residual(sol: &DbarSolution, z: (f64, f64), h: f64) -> Result<f64> {
    if !(h > 1e-6 && h < 1e-2) {
        return Err(Error::usage(format!("difference step must lie in (1e-6, 1e-2), got {h}")));
    }
    let z = Complex64::new(z.0, z.1);
    let fx = richardson_d1(|s| sol.eval_c(z + s), h);
    let fy = richardson_d1(|s| sol.eval_c(z + Complex64::new(0.0, s)), h);
    let dbar = (fx + Complex64::i() * fy) * 0.5;
    Ok((dbar - sol.eval_c(z).conj()).norm())
}

/// `(re, im, residual)` at each point.
pub fn dbar_field(sol: &DbarSolution, points: &[(f64, f64)], h: f64) -> Result<Vec<(f64, f64, f64)>> {
    points.iter().map(|&z| Ok((z.0, z.1, dbar_residual(sol, z, h)?))).collect()
}

/// Polar grid on `|z| ≤ radius`: the centre plus `rings × spokes` points.
pub fn disk_points(radius: f64, rings: usize, spokes: usize) -> Vec<(f64, f64)> {
    let mut pts = vec![(0.0, 0.0)];
    for i in 1..=rings {
        let r = radius * i as f64 / rings as f64;
        for j in 0..spokes {
            let th = std::f64::consts::TAU * j as f64 / spokes as f64;
            pts.push((r * th.cos(), r * th.sin()));
        }
    }
    pts
}

/// Maximum of [`dbar_residual`] over `points`.
pub fn dbar_check(sol: &DbarSolution, points: &[(f64, f64)], h: f64, tol: f64) -> Result<CheckReport> {
    let pts: Vec<Vec<f64>> = points.iter().map(|&(x, y)| vec![x, y]).collect();
    let mut r = sweep(format!("dbar[order={}]", sol.order()), &pts, tol, |p| {
        Ok(Some(PointEval::new(dbar_residual(sol, (p[0], p[1]), h)?)))
    })?;
    let worst_tail = points
        .iter()
        .map(|&(x, y)| sol.bessel.eval(x * x + y * y, sol.coeffs.len()).map(|v| v.tail))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    r = r.with_extra("bessel_tail", worst_tail);
    Ok(r)
}

/// `I⁺ = diag(1, -1)` and `I⁻ = [[0, -1], [-1, 0]]` conjugated by `b`, split
/// by columns: `B₁ = ½(b I⁺ b⁻¹ e₁, b I⁻ b⁻¹ e₁)`, `B₂` likewise with `e₂`.
pub fn lemma_blocks(b: &Matrix2<f64>) -> Result<(Matrix2<f64>, Matrix2<f64>)> {
    let inv = b.try_inverse().ok_or_else(|| Error::domain("B is singular"))?;
    let ip = b * Matrix2::new(1.0, 0.0, 0.0, -1.0) * inv;
    let im = b * Matrix2::new(0.0, -1.0, -1.0, 0.0) * inv;
    let b1 = Matrix2::new(ip[(0, 0)], im[(0, 0)], ip[(1, 0)], im[(1, 0)]) * 0.5;
    let b2 = Matrix2::new(ip[(0, 1)], im[(0, 1)], ip[(1, 1)], im[(1, 1)]) * 0.5;
    Ok((b1, b2))
}

/// `B₂B₁⁻¹`.
pub fn block_ratio(b: &Matrix2<f64>) -> Result<Matrix2<f64>> {
    let (b1, b2) = lemma_blocks(b)?;
    let inv = b1.try_inverse().ok_or_else(|| Error::domain("B₁ is singular"))?;
    Ok(b2 * inv)
}

/// The change of variables turning the linear `(N, M)` system with
/// `k = 2/c` into `∂f/∂z̄ = f̄`.
#[derive(Clone, Debug, PartialEq)]
pub struct HodographMaps {
    pub c: f64,
    pub k: f64,
    pub t: f64,
    pub delta: f64,
    pub p: Matrix2<f64>,
    pub q: Matrix2<f64>,
    pub b: Matrix2<f64>,
    /// Maps `(x, y)` to the argument of `f`.
    pub a: Matrix2<f64>,
    /// `t < 0`: the principal root `√(1-t²)` is used.
    pub negative_branch: bool,
}

pub fn hodograph_maps(c: f64) -> Result<HodographMaps> {
    if !(c.abs() > 1.0) || !c.is_finite() {
        return Err(Error::domain(format!("hodograph maps need |c| > 1, got {c}")));
    }
    let k = 2.0 / c;
    let t = 1.0 / c;
    let s = (1.0 - t * t).sqrt();
    let p = Matrix2::new(-1.0, 1.0, -k, 0.0);
    let q = Matrix2::new(0.0, -k, 1.0, -1.0);
    let b = Matrix2::new(t, s, 1.0, 0.0);
    let (b1, _) = lemma_blocks(&b)?;
    let pinv = p.try_inverse().ok_or_else(|| Error::domain("P is singular"))?;
    let a = (pinv * b1).transpose();
    Ok(HodographMaps {
        c,
        k,
        t,
        delta: 1.0,
        p,
        q,
        b,
        a,
        negative_branch: t < 0.0,
    })
}

impl HodographMaps {
    /// `QP⁻¹`.
    pub fn qp_inverse(&self) -> Matrix2<f64> {
        self.q * self.p.try_inverse().expect("P is invertible for finite k != 0")
    }

    /// `‖QP⁻¹ - B₂B₁⁻¹‖_max`.
    pub fn compatibility(&self) -> Result<f64> {
        Ok((self.qp_inverse() - block_ratio(&self.b)?).amax())
    }

    /// `(N, M)(x, y) = B·(U, V)(A·(x, y))` with `U + iV = f`.
    pub fn nm(&self, sol: &DbarSolution, x: f64, y: f64) -> (f64, f64) {
        let arg = self.a * nalgebra::Vector2::new(x, y);
        let (u, v) = sol.eval((arg[0], arg[1]));
        let nm = self.b * nalgebra::Vector2::new(u, v);
        (nm[0], nm[1])
    }
}

/// `(N, M)` at a point and the residual of `2M₂ = c(N₂ - N - N₁)`,
/// `2N₁ = c(-M - M₂ + M₁)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MnEval {
    pub n: f64,
    pub m: f64,
    pub residual: f64,
}

const MN_STEP: f64 = 1e-3;

pub fn mn_from_dbar(sol: &DbarSolution, c: f64, point: (f64, f64)) -> Result<MnEval> {
    let maps = hodograph_maps(c)?;
    let (x, y) = point;
    let (n, m) = maps.nm(sol, x, y);
    let pair = |dx: f64, dy: f64| {
        let (a, b) = maps.nm(sol, x + dx, y + dy);
        nalgebra::Vector2::new(a, b)
    };
    let d1 = richardson_d1(|s| pair(s, 0.0), MN_STEP);
    let d2 = richardson_d1(|s| pair(0.0, s), MN_STEP);
    let (n1, m1, n2, m2) = (d1[0], d1[1], d2[0], d2[1]);
    let e1 = 2.0 * m2 - c * (n2 - n - n1);
    let e2 = 2.0 * n1 - c * (-m - m2 + m1);
    Ok(MnEval {
        n,
        m,
        residual: e1.abs().max(e2.abs()),
    })
}

fn check_arity2(b: &dyn Candidate) -> Result<()> {
    if b.arity() != 2 {
        return Err(Error::usage(format!("{} has arity {}, expected 2", b.name(), b.arity())));
    }
    Ok(())
}

/// `|c²B₁₁B₂₂ - B₁₂²|` together with separate concavity `B₁₁, B₂₂ ≤ tol`.
pub fn monge_ampere_residual(b: &dyn Candidate, c: f64, grid: &GridSpec, tol: f64) -> Result<CheckReport> {
    check_arity2(b)?;
    sweep(format!("monge-ampere[{},c={c}]", b.name()), &grid.points(), tol, |x| {
        let h = b.hessian(x)?;
        let (b11, b12, b22) = (h.get(0, 0), h.get(0, 1), h.get(1, 1));
        let ma = (c * c * b11 * b22 - b12 * b12).abs();
        Ok(Some(
            PointEval::new(ma.max(b11).max(b22))
                .with("worst_monge_ampere", ma)
                .with("max_b11", b11)
                .with("max_b22", b22),
        ))
    })
}

/// Residuals of `-2pp_y = c(qp_x + pq_x)` and `-2qq_x = c(qp_y + pq_y)` with
/// `p = √(-B₁₁)`, `q = √(-B₂₂)`.
///
/// A point with `B₁₁ ≥ 0` or `B₂₂ ≥ 0`, or with `B₁₂` off `cpq` by more than
/// `1e-6` relative, is a precondition error naming the point.
pub fn hodograph_system_residual(b: &dyn Candidate, c: f64, grid: &GridSpec, tol: f64) -> Result<CheckReport> {
    check_arity2(b)?;
    let pq = |x: f64, y: f64| -> Result<nalgebra::Vector2<f64>> {
        let h = b.hessian(&[x, y])?;
        let (b11, b22) = (h.get(0, 0), h.get(1, 1));
        if !(b11 < 0.0 && b22 < 0.0) {
            return Err(Error::precondition(format!(
                "B₁₁ = {b11}, B₂₂ = {b22} at ({x}, {y}): separate strict concavity fails"
            )));
        }
        Ok(nalgebra::Vector2::new((-b11).sqrt(), (-b22).sqrt()))
    };
    let step = 1e-4;
    sweep(format!("hodograph-system[{},c={c}]", b.name()), &grid.points(), tol, |pt| {
        let (x, y) = (pt[0], pt[1]);
        let v = pq(x, y)?;
        let (p, q) = (v[0], v[1]);
        let b12 = b.hessian(pt)?.get(0, 1);
        let mismatch = (b12 - c * p * q).abs();
        if mismatch > 1e-6 * (1.0 + b12.abs()) {
            return Err(Error::precondition(format!(
                "B₁₂ = {b12} but c·p·q = {} at ({x}, {y})",
                c * p * q
            )));
        }
        // Neighbouring evaluations may leave the domain near its edge.
        let shifted = |dx: f64, dy: f64| pq(x + dx, y + dy).unwrap_or(nalgebra::Vector2::new(f64::NAN, f64::NAN));
        let dx = richardson_d1(|s| shifted(s, 0.0), step);
        let dy = richardson_d1(|s| shifted(0.0, s), step);
        let (px, qx, py, qy) = (dx[0], dx[1], dy[0], dy[1]);
        let r1 = (-2.0 * p * py - c * (q * px + p * qx)).abs();
        let r2 = (-2.0 * q * qx - c * (q * py + p * qy)).abs();
        if !(r1.is_finite() && r2.is_finite()) {
            return Ok(None);
        }
        Ok(Some(PointEval::new(r1.max(r2)).with("b12_mismatch", mismatch)))
    })
}

/// Solutions of `W_ττ = W_s` in the index convention `W(s, τ)`.
#[derive(Clone)]
pub enum Caloric {
    Constant(f64),
    /// `scale·(τ² + 2s)`.
    Quadratic(f64),
    /// `(4π(s + shift))^{-1/2} exp(-τ²/(4(s + shift)))`, defined for `s > -shift`.
    Kernel { shift: f64 },
    Custom(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for Caloric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Caloric::Constant(v) => write!(f, "Constant({v})"),
            Caloric::Quadratic(v) => write!(f, "Quadratic({v})"),
            Caloric::Kernel { shift } => write!(f, "Kernel {{ shift: {shift} }}"),
            Caloric::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl Caloric {
    pub fn eval(&self, s: f64, tau: f64) -> Result<f64> {
        Ok(match self {
            Caloric::Constant(v) => *v,
            Caloric::Quadratic(a) => a * (tau * tau + 2.0 * s),
            Caloric::Kernel { shift } => {
                let time = s + shift;
                if !(time > 0.0) {
                    return Err(Error::domain(format!("heat kernel evaluated at non-positive time {time}")));
                }
                (-tau * tau / (4.0 * time)).exp() / (4.0 * std::f64::consts::PI * time).sqrt()
            }
            Caloric::Custom(f) => f(s, tau),
        })
    }
}

const REDUCTION_STEP: f64 = 1e-3;

/// `M = e^{-c₁y/2 + c₁²x/(4c₂)} W(-x/c₂, y)` against
/// `M₂₂ + c₁M₂ + c₂M₁ = 0`, by finite differences.
pub fn parabolic_reduction_check(c1: f64, c2: f64, w: &Caloric, grid: &GridSpec, tol: f64) -> Result<CheckReport> {
    if c2 == 0.0 {
        return Err(Error::usage("the parabolic reduction needs c₂ != 0"));
    }
    if grid.dim() != 2 {
        return Err(Error::usage("the parabolic reduction runs on a planar grid"));
    }
    let m = |x: f64, y: f64| -> Result<f64> {
        Ok((-c1 * y / 2.0 + c1 * c1 * x / (4.0 * c2)).exp() * w.eval(-x / c2, y)?)
    };
    sweep(format!("parabolic[{w:?},c1={c1},c2={c2}]"), &grid.points(), tol, |p| {
        let (x, y) = (p[0], p[1]);
        m(x, y)?;
        // Probe the stencil once so a stencil leaving the domain is skipped.
        for (dx, dy) in [(REDUCTION_STEP, 0.0), (-REDUCTION_STEP, 0.0), (0.0, REDUCTION_STEP), (0.0, -REDUCTION_STEP)] {
            m(x + dx, y + dy)?;
        }
        let f = |dx: f64, dy: f64| m(x + dx, y + dy).unwrap_or(f64::NAN);
        let m1 = richardson_d1(|s| f(s, 0.0), REDUCTION_STEP);
        let m2 = richardson_d1(|s| f(0.0, s), REDUCTION_STEP);
        let m22 = richardson_d2(|s| f(0.0, s), REDUCTION_STEP);
        Ok(Some(PointEval::new((m22 + c1 * m2 + c2 * m1).abs())))
    })
}

/// Eigenfunctions `ΔW = λW` of the planar Laplacian.
#[derive(Clone)]
pub enum LaplaceEigen {
    /// `e^{αx + βy}`, eigenvalue `α² + β²`.
    Exponential { alpha: f64, beta: f64 },
    /// `x² - y²`, eigenvalue 0.
    Harmonic,
    Custom {
        f: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
        eigenvalue: f64,
    },
}

impl std::fmt::Debug for LaplaceEigen {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LaplaceEigen::Exponential { alpha, beta } => write!(f, "Exponential {{ alpha: {alpha}, beta: {beta} }}"),
            LaplaceEigen::Harmonic => write!(f, "Harmonic"),
            LaplaceEigen::Custom { eigenvalue, .. } => write!(f, "Custom {{ eigenvalue: {eigenvalue} }}"),
        }
    }
}

impl LaplaceEigen {
    pub fn eigenvalue(&self) -> f64 {
        match self {
            LaplaceEigen::Exponential { alpha, beta } => alpha * alpha + beta * beta,
            LaplaceEigen::Harmonic => 0.0,
            LaplaceEigen::Custom { eigenvalue, .. } => *eigenvalue,
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            LaplaceEigen::Exponential { alpha, beta } => (alpha * x + beta * y).exp(),
            LaplaceEigen::Harmonic => x * x - y * y,
            LaplaceEigen::Custom { f, .. } => f(x, y),
        }
    }
}

/// `M = e^{-c₁x/2 - c₂y/2} W` against `M₁₁ + M₂₂ + c₁M₁ + c₂M₂ = 0`.
pub fn elliptic_reduction_check(c1: f64, c2: f64, w: &LaplaceEigen, grid: &GridSpec, tol: f64) -> Result<CheckReport> {
    let want = (c1 * c1 + c2 * c2) / 4.0;
    if (w.eigenvalue() - want).abs() > 1e-10 {
        return Err(Error::precondition(format!(
            "eigenvalue {} does not match (c₁² + c₂²)/4 = {want}",
            w.eigenvalue()
        )));
    }
    if grid.dim() != 2 {
        return Err(Error::usage("the elliptic reduction runs on a planar grid"));
    }
    let m = |x: f64, y: f64| (-c1 * x / 2.0 - c2 * y / 2.0).exp() * w.eval(x, y);
    sweep(format!("elliptic[{w:?},c1={c1},c2={c2}]"), &grid.points(), tol, |p| {
        let (x, y) = (p[0], p[1]);
        let m1 = richardson_d1(|s| m(x + s, y), REDUCTION_STEP);
        let m2 = richardson_d1(|s| m(x, y + s), REDUCTION_STEP);
        let m11 = richardson_d2(|s| m(x + s, y), REDUCTION_STEP);
        let m22 = richardson_d2(|s| m(x, y + s), REDUCTION_STEP);
        Ok(Some(PointEval::new((m11 + m22 + c1 * m1 + c2 * m2).abs())))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{BorellB, BoxDomain, PowerProduct};
    use crate::linalg::SymMatrix;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_disk(n: usize, seed: u64) -> Vec<(f64, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let r = rng.random::<f64>().sqrt();
                let th = rng.random_range(0.0..std::f64::consts::TAU);
                (r * th.cos(), r * th.sin())
            })
            .collect()
    }

    #[test]
    fn bessel_values() {
        let j = BesselJ::new(30);
        assert_eq!(j.eval(0.0, 0).unwrap().value, 1.0);
        assert_eq!(j.eval(0.0, 1).unwrap().value, 1.0);
        assert_eq!(j.eval(0.0, 2).unwrap().value, 0.5);
        // Direct summation oracle at two orders.
        let direct = |m: u32| -> f64 {
            let mut s = 0.0;
            let mut f = 1.0;
            for k in 0..=m {
                if k > 0 {
                    f *= k as f64;
                }
                s += 1.0 / (f * f);
            }
            s
        };
        assert!((direct(30) - direct(40)).abs() < 1e-14);
        assert!((j.eval(1.0, 0).unwrap().value - direct(40)).abs() < 1e-14);
        assert!((j.eval(1.0, 0).unwrap().value - 2.279_585_302_336_067).abs() < 1e-14);
        assert!(j.eval(1.0, 0).unwrap().tail < 1e-60);
        assert!(j.eval(1.0, 31).is_err());
    }

    #[test]
    fn bessel_satisfies_its_ode() {
        // r J'' + J' = J, differentiated d times: r J^{(d+2)} + (d+1) J^{(d+1)} = J^{(d)}.
        let j = BesselJ::new(40);
        for r in [0.0, 0.3, 1.0, 2.5] {
            for d in 0..5 {
                let v = |k| j.eval(r, k).unwrap().value;
                assert!((r * v(d + 2) + (d as f64 + 1.0) * v(d + 1) - v(d)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn single_coefficient_residuals() {
        let pts = unit_disk(200, 7);
        for (idx, c) in [(0, (1.0, 0.0)), (1, (0.0, 1.0))] {
            let sol = DbarSolution::single(idx, c, 30).unwrap();
            let r = dbar_check(&sol, &pts, DEFAULT_DBAR_STEP, 1e-5).unwrap();
            assert!(r.passed(), "{r:?}");
        }
        let zero = DbarSolution::new(&[(0.0, 0.0)], 30).unwrap();
        assert_eq!(dbar_residual(&zero, (0.3, 0.4), 1e-4).unwrap(), 0.0);
        assert!(dbar_residual(&zero, (0.3, 0.4), 0.1).is_err());
    }

    #[test]
    fn c0_closed_form() {
        let sol = DbarSolution::single(0, (1.0, 0.0), 30).unwrap();
        let j = BesselJ::new(30);
        let (x, y) = (0.4, -0.7);
        let r = x * x + y * y;
        let (re, im) = sol.eval((x, y));
        let (j0, j1) = (j.eval(r, 0).unwrap().value, j.eval(r, 1).unwrap().value);
        assert!((re - (j0 + j1 * x)).abs() < 1e-15);
        assert!((im - (-j1 * y)).abs() < 1e-15);
    }

    #[test]
    fn residual_improves_with_order() {
        let lo = DbarSolution::new(&[(1.0, 0.5), (0.2, -0.3)], 20).unwrap();
        let hi = DbarSolution::new(&[(1.0, 0.5), (0.2, -0.3)], 40).unwrap();
        for z in unit_disk(30, 3).into_iter().map(|(x, y)| (2.0 * x, 2.0 * y)) {
            let (a, b) = (dbar_residual(&lo, z, 1e-4).unwrap(), dbar_residual(&hi, z, 1e-4).unwrap());
            assert!(b <= a + 1e-9, "{z:?}: {b} > {a}");
        }
    }

    #[test]
    fn hodograph_examples() {
        let h = hodograph_maps(2.0).unwrap();
        assert!((h.qp_inverse() - Matrix2::new(-1.0, 1.0, -1.0, 0.0)).amax() < 1e-15);
        assert!(h.compatibility().unwrap() <= 1e-12);
        let h = hodograph_maps(4.0).unwrap();
        let t: f64 = 0.25;
        let s = (1.0 - t * t).sqrt();
        let want = Matrix2::new(0.0, -0.5, 1.0 / (4.0 * t * s), -(2.0 * t * t - 1.0) / (4.0 * t * s));
        assert!((h.a - want).amax() < 1e-14, "{}", h.a);
        assert!(matches!(hodograph_maps(0.5), Err(Error::Domain(_))));
        assert!(matches!(hodograph_maps(-1.0), Err(Error::Domain(_))));
        assert!(hodograph_maps(-3.0).unwrap().negative_branch);
    }

    #[test]
    fn compatibility_over_many_c() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let mag = rng.random_range(1.0f64..10.0).max(1.0 + 1e-9);
            let c = if rng.random::<bool>() { mag } else { -mag };
            let h = hodograph_maps(c).unwrap();
            assert!(h.compatibility().unwrap() <= 1e-12, "c = {c}");
        }
    }

    #[test]
    fn block_ratio_row_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut done = 0;
        while done < 100 {
            let b: Matrix2<f64> = Matrix2::from_fn(|_, _| rng.random_range(-2.0..2.0));
            if b.determinant().abs() < 0.1 {
                continue;
            }
            let r = b.row(0).transpose();
            let s = b.row(1).transpose();
            let want = Matrix2::new(-2.0 * r.dot(&s) / s.norm_squared(), r.norm_squared() / s.norm_squared(), -1.0, 0.0);
            let got = block_ratio(&b).unwrap();
            assert!((got - want).amax() < 1e-10 * (1.0 + want.amax()), "{b} {got} {want}");
            done += 1;
        }
    }

    #[test]
    fn nm_system_from_series() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let sol = DbarSolution::single(0, (1.0, 0.0), 30).unwrap();
        for c in [2.0, -2.0] {
            for _ in 0..50 {
                let p = (rng.random::<f64>(), rng.random::<f64>());
                let e = mn_from_dbar(&sol, c, p).unwrap();
                assert!(e.residual <= 1e-4, "c = {c}, {p:?}: {e:?}");
            }
        }
        let zero = DbarSolution::new(&[(0.0, 0.0)], 5).unwrap();
        assert_eq!(mn_from_dbar(&zero, 3.0, (0.2, 0.1)).unwrap().residual, 0.0);
    }

    #[derive(Debug)]
    struct NegSquares;

    impl Candidate for NegSquares {
        fn name(&self) -> String {
            "neg-squares".into()
        }
        fn arity(&self) -> usize {
            2
        }
        fn domain(&self) -> BoxDomain {
            BoxDomain::cube(2, f64::NEG_INFINITY, f64::INFINITY)
        }
        fn value(&self, x: &[f64]) -> Result<f64> {
            Ok(-x[0] * x[0] - x[1] * x[1])
        }
        fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
            Ok(vec![-2.0 * x[0], -2.0 * x[1]])
        }
        fn hessian(&self, _: &[f64]) -> Result<SymMatrix> {
            Ok(SymMatrix::diagonal(&[-2.0, -2.0]))
        }
    }

    #[derive(Debug)]
    struct Flat;

    impl Candidate for Flat {
        fn name(&self) -> String {
            "flat".into()
        }
        fn arity(&self) -> usize {
            2
        }
        fn domain(&self) -> BoxDomain {
            BoxDomain::cube(2, f64::NEG_INFINITY, f64::INFINITY)
        }
        fn value(&self, _: &[f64]) -> Result<f64> {
            Ok(1.0)
        }
        fn gradient(&self, _: &[f64]) -> Result<Vec<f64>> {
            Ok(vec![0.0, 0.0])
        }
        fn hessian(&self, _: &[f64]) -> Result<SymMatrix> {
            Ok(SymMatrix::zeros(2))
        }
    }

    #[test]
    fn monge_ampere_examples() {
        let grid = GridSpec::uniform(2, 0.05, 0.95, 21).unwrap();
        for p in [0.2, 0.5, 0.8] {
            let r = monge_ampere_residual(&BorellB::new(p).unwrap(), 1.0 / p, &grid, 1e-6).unwrap();
            assert!(r.passed(), "{r:?}");
        }
        let fine = GridSpec::uniform(2, 0.05, 0.95, 41).unwrap();
        assert!(monge_ampere_residual(&BorellB::new(0.5).unwrap(), 2.0, &fine, 1e-6).unwrap().passed());
        let r = monge_ampere_residual(&NegSquares, 1.0, &grid, 1e-6).unwrap();
        assert!((r.extra("worst_monge_ampere").unwrap() - 4.0).abs() < 1e-15);
        assert!(!r.passed());
        let p: f64 = 0.6;
        let a = 1.5;
        let b = 1.0 + p * p / (a - 1.0);
        let pos = GridSpec::uniform(2, 0.2, 2.0, 15).unwrap();
        let r = monge_ampere_residual(&PowerProduct::new(a, b).unwrap(), 1.0 / p, &pos, 1e-8).unwrap();
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn hodograph_system_examples() {
        let grid = GridSpec::uniform(2, 0.1, 0.9, 9).unwrap();
        let r = hodograph_system_residual(&BorellB::new(0.5).unwrap(), 2.0, &grid, 1e-4).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!(matches!(hodograph_system_residual(&Flat, 1.0, &grid, 1e-4), Err(Error::Precondition(_))));
        let p: f64 = 0.6;
        let a = 2.0;
        let b = 1.0 + p * p / (a - 1.0);
        let pos = GridSpec::uniform(2, 0.3, 2.0, 9).unwrap();
        let r = hodograph_system_residual(&PowerProduct::new(a, b).unwrap(), 1.0 / p, &pos, 1e-4).unwrap();
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn parabolic_examples() {
        let grid = GridSpec::uniform(2, -0.5, 0.5, 7).unwrap();
        for w in [Caloric::Constant(2.0), Caloric::Quadratic(1.0)] {
            let r = parabolic_reduction_check(1.3, -0.7, &w, &grid, 1e-8).unwrap();
            assert!(r.passed(), "{r:?}");
        }
        let r = parabolic_reduction_check(0.8, 1.5, &Caloric::Kernel { shift: 1.0 }, &grid, 1e-6).unwrap();
        assert!(r.passed() && r.skipped == 0, "{r:?}");
        assert!(parabolic_reduction_check(1.0, 0.0, &Caloric::Constant(1.0), &grid, 1e-6).is_err());
        // A non-caloric W fails.
        let bad = Caloric::Custom(Arc::new(|s, t| s * s + t));
        assert!(!parabolic_reduction_check(1.0, 1.0, &bad, &grid, 1e-6).unwrap().passed());
    }

    #[test]
    fn elliptic_examples() {
        let grid = GridSpec::uniform(2, -0.5, 0.5, 7).unwrap();
        assert!(elliptic_reduction_check(0.0, 0.0, &LaplaceEigen::Harmonic, &grid, 1e-8).unwrap().passed());
        let w = LaplaceEigen::Exponential { alpha: 1.0, beta: 0.0 };
        assert!(elliptic_reduction_check(2.0, 0.0, &w, &grid, 1e-8).unwrap().passed());
        let w = LaplaceEigen::Exponential { alpha: 1.0, beta: 1.0 };
        assert!(elliptic_reduction_check(2.0, 2.0, &w, &grid, 1e-8).unwrap().passed());
        assert!(matches!(
            elliptic_reduction_check(1.0, 0.0, &LaplaceEigen::Harmonic, &grid, 1e-8),
            Err(Error::Precondition(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn random_series_solve_dbar(re0 in -1.0f64..1.0, im0 in -1.0f64..1.0, re1 in -1.0f64..1.0, im1 in -1.0f64..1.0,
                                    x in -0.7f64..0.7, y in -0.7f64..0.7) {
            let sol = DbarSolution::new(&[(re0, im0), (re1, im1)], 30).unwrap();
            prop_assert!(dbar_residual(&sol, (x, y), 1e-4).unwrap() <= 1e-5);
        }

        #[test]
        fn elliptic_exponentials_on_the_circle(c1 in -2.0f64..2.0, c2 in -2.0f64..2.0, th in 0.0f64..std::f64::consts::TAU) {
            let rad = (c1 * c1 + c2 * c2).sqrt() / 2.0;
            let w = LaplaceEigen::Exponential { alpha: rad * th.cos(), beta: rad * th.sin() };
            let grid = GridSpec::uniform(2, -0.3, 0.3, 3).unwrap();
            prop_assert!(elliptic_reduction_check(c1, c2, &w, &grid, 1e-7).unwrap().passed());
        }
    }
}
