//! Modified heat flows of special initial data, the Ornstein–Uhlenbeck
//! semigroup, and compositions `V(x, t) = B(u_1(a_1·x, t), …)`.
//!
//! Time is a parameter: every `U(·, t)` is computed from its Gaussian
//! integral representation, never by stepping.

use std::fmt::Debug;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::catalog::Candidate;
use crate::error::{Error, Result};
use crate::linalg::{psd_sqrt, SymMatrix};
use crate::quadrature::GaussHermite;
use crate::sets::gaussian_interval;
use crate::special::{norm_cdf, norm_pdf};

/// Default Gauss–Hermite order for smooth data.
pub const DEFAULT_ORDER: usize = 64;
/// Order used for indicator-like data.
pub const INDICATOR_ORDER: usize = 256;
/// Default mollification width for indicators.
pub const DEFAULT_MOLLIFIER: f64 = 1e-3;
/// How far outside the closed domain a flow value may land before
/// [`ComposedV`] refuses to clamp it.
pub const CLAMP_BUDGET: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Smoothness {
    Smooth,
    Indicator,
    Mollified,
}

/// A bounded function of one variable used as initial data.
pub trait Datum: Send + Sync + Debug {
    fn value(&self, y: f64) -> f64;

    /// `E[F(y + √var Z)]`; implementations with a closed form override this.
    fn smoothed(&self, y: f64, var: f64, rule: &GaussHermite) -> f64 {
        if var == 0.0 {
            return self.value(y);
        }
        let s = var.sqrt();
        rule.expect(|z| self.value(y + s * z))
    }

    /// `d/dy E[F(y + √var Z)] = E[F(y + √var Z) Z] / √var` for `var > 0`.
    fn smoothed_derivative(&self, y: f64, var: f64, rule: &GaussHermite) -> f64 {
        let s = var.sqrt();
        rule.expect(|z| self.value(y + s * z) * z) / s
    }

    /// Whether [`Datum::smoothed`] is exact rather than a quadrature.
    fn exact_smoothing(&self) -> bool {
        false
    }

    /// Closed interval containing every value.
    fn range(&self) -> (f64, f64);

    fn smoothness(&self) -> Smoothness;

    /// Radius outside of which the datum is constant, if any.
    fn support_radius(&self) -> Option<f64> {
        None
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Constant(pub f64);

impl Datum for Constant {
    fn exact_smoothing(&self) -> bool {
        true
    }

    fn value(&self, _: f64) -> f64 {
        self.0
    }

    fn smoothed(&self, _: f64, _: f64, _: &GaussHermite) -> f64 {
        self.0
    }

    fn smoothed_derivative(&self, _: f64, _: f64, _: &GaussHermite) -> f64 {
        0.0
    }

    fn range(&self) -> (f64, f64) {
        (self.0, self.0)
    }

    fn smoothness(&self) -> Smoothness {
        Smoothness::Smooth
    }

    fn support_radius(&self) -> Option<f64> {
        Some(0.0)
    }
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// An arbitrary closure with declared range; smoothed by quadrature.
#[derive(Clone)]
pub struct FnDatum {
    f: ScalarFn,
    range: (f64, f64),
    tag: Smoothness,
    label: String,
}

impl FnDatum {
    pub fn new(label: impl Into<String>, range: (f64, f64), f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            f: Arc::new(f),
            range,
            tag: Smoothness::Smooth,
            label: label.into(),
        }
    }

    pub fn tagged(mut self, tag: Smoothness) -> Self {
        self.tag = tag;
        self
    }
}

impl Debug for FnDatum {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FnDatum").field("label", &self.label).field("range", &self.range).finish()
    }
}

impl Datum for FnDatum {
    fn value(&self, y: f64) -> f64 {
        (self.f)(y)
    }

    fn range(&self) -> (f64, f64) {
        self.range
    }

    fn smoothness(&self) -> Smoothness {
        self.tag
    }
}

/// `base + height · exp(-(y - center)² / (2 width²))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianBump {
    pub center: f64,
    pub width: f64,
    pub height: f64,
    pub base: f64,
}

impl GaussianBump {
    pub fn new(center: f64, width: f64, height: f64, base: f64) -> Result<Self> {
        if !(width > 0.0) || !center.is_finite() || !height.is_finite() || !base.is_finite() {
            return Err(Error::usage(format!("invalid bump (center {center}, width {width})")));
        }
        Ok(Self {
            center,
            width,
            height,
            base,
        })
    }
}

impl Datum for GaussianBump {
    fn exact_smoothing(&self) -> bool {
        true
    }

    fn value(&self, y: f64) -> f64 {
        let d = (y - self.center) / self.width;
        self.base + self.height * (-0.5 * d * d).exp()
    }

    fn smoothed(&self, y: f64, var: f64, _: &GaussHermite) -> f64 {
        let w2 = self.width * self.width + var;
        let d = y - self.center;
        self.base + self.height * self.width / w2.sqrt() * (-0.5 * d * d / w2).exp()
    }

    fn smoothed_derivative(&self, y: f64, var: f64, _: &GaussHermite) -> f64 {
        let w2 = self.width * self.width + var;
        let d = y - self.center;
        -self.height * self.width / w2.sqrt() * d / w2 * (-0.5 * d * d / w2).exp()
    }

    fn range(&self) -> (f64, f64) {
        let top = self.base + self.height;
        (self.base.min(top), self.base.max(top))
    }

    fn smoothness(&self) -> Smoothness {
        Smoothness::Smooth
    }
}

/// `low + (high - low) · 1_{(lo, hi)}` convolved with a centred Gaussian of
/// standard deviation `width`; `width = 0` is the raw indicator. Either end
/// may be infinite, which gives rays.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MollifiedInterval {
    pub lo: f64,
    pub hi: f64,
    pub width: f64,
    pub low: f64,
    pub high: f64,
}

impl MollifiedInterval {
    pub fn new(lo: f64, hi: f64, width: f64) -> Result<Self> {
        Self::with_levels(lo, hi, width, 0.0, 1.0)
    }

    pub fn with_levels(lo: f64, hi: f64, width: f64, low: f64, high: f64) -> Result<Self> {
        if !(lo < hi) || !(width >= 0.0) || !low.is_finite() || !high.is_finite() {
            return Err(Error::usage(format!("invalid interval datum ({lo}, {hi}) width {width}")));
        }
        Ok(Self {
            lo,
            hi,
            width,
            low,
            high,
        })
    }

    /// The left ray `(-∞, a)`.
    pub fn ray(a: f64, width: f64) -> Result<Self> {
        Self::new(f64::NEG_INFINITY, a, width)
    }

    /// `γ₁`-mass of the underlying indicator after smoothing by `var`, at `y`.
    fn mass(&self, y: f64, sd: f64) -> f64 {
        if sd == 0.0 {
            return if y > self.lo && y < self.hi { 1.0 } else { 0.0 };
        }
        gaussian_interval((self.lo - y) / sd, (self.hi - y) / sd)
    }
}

impl Datum for MollifiedInterval {
    fn exact_smoothing(&self) -> bool {
        true
    }

    fn value(&self, y: f64) -> f64 {
        self.low + (self.high - self.low) * self.mass(y, self.width)
    }

    fn smoothed(&self, y: f64, var: f64, _: &GaussHermite) -> f64 {
        let sd = (self.width * self.width + var).sqrt();
        self.low + (self.high - self.low) * self.mass(y, sd)
    }

    fn smoothed_derivative(&self, y: f64, var: f64, _: &GaussHermite) -> f64 {
        let sd = (self.width * self.width + var).sqrt();
        let edge = |e: f64| if e.is_finite() { norm_pdf((e - y) / sd) } else { 0.0 };
        (self.high - self.low) * (edge(self.lo) - edge(self.hi)) / sd
    }

    fn range(&self) -> (f64, f64) {
        (self.low.min(self.high), self.low.max(self.high))
    }

    fn smoothness(&self) -> Smoothness {
        if self.width == 0.0 {
            Smoothness::Indicator
        } else {
            Smoothness::Mollified
        }
    }

    fn support_radius(&self) -> Option<f64> {
        (self.lo.is_finite() && self.hi.is_finite() && self.width == 0.0).then(|| self.lo.abs().max(self.hi.abs()))
    }
}

/// Continuous piecewise-linear interpolant with constant tails.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinear {
    knots: Vec<f64>,
    values: Vec<f64>,
}

impl PiecewiseLinear {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.is_empty() || knots.len() != values.len() {
            return Err(Error::usage("piecewise-linear datum needs equal, non-empty knot and value lists"));
        }
        if knots.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::usage("knots must be strictly increasing"));
        }
        if values.iter().chain(&knots).any(|v| !v.is_finite()) {
            return Err(Error::usage("knots and values must be finite"));
        }
        Ok(Self { knots, values })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl Datum for PiecewiseLinear {
    fn exact_smoothing(&self) -> bool {
        true
    }

    fn value(&self, y: f64) -> f64 {
        let k = &self.knots;
        let n = k.len();
        if y <= k[0] {
            return self.values[0];
        }
        if y >= k[n - 1] {
            return self.values[n - 1];
        }
        let i = k.partition_point(|&x| x <= y) - 1;
        let s = (y - k[i]) / (k[i + 1] - k[i]);
        self.values[i] + s * (self.values[i + 1] - self.values[i])
    }

    fn smoothed(&self, y: f64, var: f64, _: &GaussHermite) -> f64 {
        if var == 0.0 {
            return self.value(y);
        }
        let sd = var.sqrt();
        let k = &self.knots;
        let v = &self.values;
        let n = k.len();
        let z = |x: f64| (x - y) / sd;
        let mut total = v[0] * norm_cdf(z(k[0])) + v[n - 1] * norm_cdf(-z(k[n - 1]));
        for i in 0..n - 1 {
            let (zl, zr) = (z(k[i]), z(k[i + 1]));
            let m = (v[i + 1] - v[i]) / (k[i + 1] - k[i]);
            let c = v[i] - m * k[i];
            total += (m * y + c) * gaussian_interval(zl, zr) + m * sd * (norm_pdf(zl) - norm_pdf(zr));
        }
        total
    }

    fn smoothed_derivative(&self, y: f64, var: f64, _: &GaussHermite) -> f64 {
        let sd = var.sqrt();
        let k = &self.knots;
        let v = &self.values;
        (0..k.len() - 1)
            .map(|i| {
                let m = (v[i + 1] - v[i]) / (k[i + 1] - k[i]);
                m * gaussian_interval((k[i] - y) / sd, (k[i + 1] - y) / sd)
            })
            .sum()
    }

    fn range(&self) -> (f64, f64) {
        let lo = self.values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    fn smoothness(&self) -> Smoothness {
        Smoothness::Smooth
    }
}

/// Initial data `F(a·x)` flowing by `∂_t U = speed · ∂_yy U`.
#[derive(Clone, Debug)]
pub struct SpecialFlow {
    pub datum: Arc<dyn Datum>,
    pub a: Vec<f64>,
    pub speed: f64,
}

impl SpecialFlow {
    /// Speed `<Ca, a>`, which must be positive.
    pub fn new(datum: Arc<dyn Datum>, a: Vec<f64>, c: &SymMatrix) -> Result<Self> {
        if a.len() != c.dim() {
            return Err(Error::usage(format!("direction has {} entries, C is {}x{}", a.len(), c.dim(), c.dim())));
        }
        let av = DVector::from_column_slice(&a);
        let speed = (c.as_matrix() * &av).dot(&av);
        Self::with_speed(datum, a, speed)
    }

    pub fn with_speed(datum: Arc<dyn Datum>, a: Vec<f64>, speed: f64) -> Result<Self> {
        if !(speed > 0.0 && speed.is_finite()) {
            return Err(Error::precondition(format!("flow speed <Ca, a> = {speed} is not positive")));
        }
        Ok(Self { datum, a, speed })
    }

    /// `U(y, t)`.
    pub fn eval(&self, y: f64, t: f64, rule: &GaussHermite) -> Result<f64> {
        heat_flow_special(self, y, t, rule)
    }

    /// `∂_y U(y, t)` for `t > 0`.
    pub fn derivative(&self, y: f64, t: f64, rule: &GaussHermite) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::usage(format!("derivative needs t > 0, got {t}")));
        }
        Ok(self.datum.smoothed_derivative(y, 2.0 * t * self.speed, rule))
    }

    /// `a·x`.
    pub fn project(&self, x: &[f64]) -> f64 {
        self.a.iter().zip(x).map(|(a, x)| a * x).sum()
    }
}

/// `U(y, t) = ∫ F(y + z √(2t·speed)) dγ₁(z)`; `t = 0` returns `F(y)`.
pub fn heat_flow_special(flow: &SpecialFlow, y: f64, t: f64, rule: &GaussHermite) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::usage(format!("flow time must be non-negative, got {t}")));
    }
    if t == 0.0 {
        return Ok(flow.datum.value(y));
    }
    Ok(flow.datum.smoothed(y, 2.0 * t * flow.speed, rule))
}

/// `∂_t U - speed ∂_yy U` by central differences with step `h`.
pub fn flow_pde_residual(flow: &SpecialFlow, y: f64, t: f64, h: f64, rule: &GaussHermite) -> Result<f64> {
    if !(h > 0.0 && t > h) {
        return Err(Error::usage(format!("need t > h > 0, got t={t}, h={h}")));
    }
    let u = |y: f64, t: f64| heat_flow_special(flow, y, t, rule);
    let ut = (u(y, t + h)? - u(y, t - h)?) / (2.0 * h);
    let uyy = (u(y + h, t)? - 2.0 * u(y, t)? + u(y - h, t)?) / (h * h);
    Ok(ut - flow.speed * uyy)
}

/// Largest deviation between the central-difference gradient of
/// `x ↦ U(a·x, t)` and `a U'(a·x, t)`.
pub fn gradient_identity_check(flow: &SpecialFlow, x: &[f64], t: f64, rule: &GaussHermite) -> Result<f64> {
    if x.len() != flow.a.len() {
        return Err(Error::usage(format!("point has {} entries, direction has {}", x.len(), flow.a.len())));
    }
    let y = flow.project(x);
    let du = flow.derivative(y, t, rule)?;
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut p = x.to_vec();
    for i in 0..x.len() {
        p[i] = x[i] + h;
        let up = heat_flow_special(flow, flow.project(&p), t, rule)?;
        p[i] = x[i] - h;
        let um = heat_flow_special(flow, flow.project(&p), t, rule)?;
        p[i] = x[i];
        worst = worst.max(((up - um) / (2.0 * h) - flow.a[i] * du).abs());
    }
    Ok(worst)
}

/// `∫ f(e^{-t} x + √(1 - e^{-2t}) y) dγ_k(y)` by the tensor rule.
pub fn ou_semigroup(f: impl Fn(&[f64]) -> f64, t: f64, x: &[f64], rule: &GaussHermite) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::usage(format!("semigroup time must be non-negative, got {t}")));
    }
    if t == 0.0 {
        return Ok(f(x));
    }
    let (e, s) = ((-t).exp(), (-(-2.0 * t).exp_m1()).sqrt());
    let mut pt = vec![0.0; x.len()];
    Ok(rule.expect_nd(x.len(), |y| {
        for ((p, xi), yi) in pt.iter_mut().zip(x).zip(y) {
            *p = e * xi + s * yi;
        }
        f(&pt)
    }))
}

type VectorFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Initial data `F(xA)` with `F: R^s → R` and `A` of size `k × s`.
#[derive(Clone)]
pub struct GeneralFlow {
    f: VectorFn,
    a: DMatrix<f64>,
    gram: SymMatrix,
}

impl Debug for GeneralFlow {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GeneralFlow").field("a", &self.a).field("gram", &self.gram).finish()
    }
}

impl GeneralFlow {
    /// Requires `A*CA` positive definite.
    pub fn new(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static, a: DMatrix<f64>, c: &SymMatrix) -> Result<Self> {
        if a.nrows() != c.dim() {
            return Err(Error::usage(format!("A has {} rows, C is {}x{}", a.nrows(), c.dim(), c.dim())));
        }
        let gram = SymMatrix::new(a.transpose() * c.as_matrix() * &a)?;
        let ev = gram.eigenvalues();
        let scale = ev.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if !(ev[0] > 1e-12 * scale.max(1e-300)) {
            return Err(Error::precondition(format!(
                "A*CA must be positive definite; smallest eigenvalue {}",
                ev[0]
            )));
        }
        Ok(Self { f: Arc::new(f), a, gram })
    }

    pub fn dim(&self) -> usize {
        self.a.ncols()
    }

    pub fn gram(&self) -> &SymMatrix {
        &self.gram
    }
}

/// `∫ F(xA + (2t A*CA)^{1/2} y) dγ_s(y)`.
pub fn heat_flow_general(gf: &GeneralFlow, x: &[f64], t: f64, rule: &GaussHermite) -> Result<f64> {
    if x.len() != gf.a.nrows() {
        return Err(Error::usage(format!("point has {} entries, A has {} rows", x.len(), gf.a.nrows())));
    }
    if !(t >= 0.0) {
        return Err(Error::usage(format!("flow time must be non-negative, got {t}")));
    }
    let xa: Vec<f64> = (0..gf.dim()).map(|j| gf.a.column(j).iter().zip(x).map(|(a, x)| a * x).sum()).collect();
    if t == 0.0 {
        return Ok((gf.f)(&xa));
    }
    let root = psd_sqrt(&gf.gram.scaled(2.0 * t))?;
    let r = root.as_matrix();
    let s = gf.dim();
    let mut pt = vec![0.0; s];
    Ok(rule.expect_nd(s, |y| {
        for i in 0..s {
            pt[i] = xa[i] + (0..s).map(|j| r[(i, j)] * y[j]).sum::<f64>();
        }
        (gf.f)(&pt)
    }))
}

/// Value of `V(x, t)` and how many flow values had to be clamped.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VEval {
    pub value: f64,
    pub clamps: usize,
}

/// `V(x, t) = B(u_1(a_1·x, t), …, u_n(a_n·x, t))`, each flow at its own speed.
#[derive(Clone, Debug)]
pub struct ComposedV {
    pub b: Arc<dyn Candidate>,
    pub flows: Vec<SpecialFlow>,
    /// Distance from the boundary used when a value must be pulled inside.
    pub margin: f64,
}

impl ComposedV {
    pub fn new(b: Arc<dyn Candidate>, flows: Vec<SpecialFlow>) -> Result<Self> {
        if b.arity() != flows.len() {
            return Err(Error::usage(format!("{} takes {} arguments, got {} flows", b.name(), b.arity(), flows.len())));
        }
        let k = flows.first().map_or(0, |f| f.a.len());
        if flows.iter().any(|f| f.a.len() != k) {
            return Err(Error::usage("flow directions have different lengths"));
        }
        Ok(Self {
            b,
            flows,
            margin: crate::catalog::DEFAULT_MARGIN,
        })
    }

    pub fn with_margin(mut self, margin: f64) -> Self {
        self.margin = margin;
        self
    }

    pub fn eval(&self, x: &[f64], t: f64, rule: &GaussHermite) -> Result<VEval> {
        let u: Vec<f64> = self
            .flows
            .iter()
            .map(|f| heat_flow_special(f, f.project(x), t, rule))
            .collect::<Result<_>>()?;
        self.apply(&u)
    }

    pub fn apply(&self, u: &[f64]) -> Result<VEval> {
        clamped_value(self.b.as_ref(), u, self.margin)
    }
}

/// `B(u)` with values pulled into the domain: first onto the closed box
/// (within [`CLAMP_BUDGET`]) where `B` is evaluated by its continuous
/// extension, then into the `margin`-shrunk box if `B` has none there.
pub fn clamped_value(b: &dyn Candidate, u: &[f64], margin: f64) -> Result<VEval> {
    let dom = b.domain();
    let mut v = u.to_vec();
    let mut clamps = 0;
    for (j, x) in v.iter_mut().enumerate() {
        let (lo, hi) = (dom.lo[j], dom.hi[j]);
        if *x < lo - CLAMP_BUDGET || *x > hi + CLAMP_BUDGET || x.is_nan() {
            return Err(Error::domain(format!(
                "argument {j} left the domain of {}: value {x} outside [{lo}, {hi}]",
                b.name()
            )));
        }
        if *x < lo || *x > hi {
            *x = x.clamp(lo, hi);
            clamps += 1;
        }
    }
    match b.value_closed(&v) {
        Ok(value) => Ok(VEval { value, clamps }),
        Err(Error::Domain(_)) => {
            let inner = dom.shrunk(margin);
            for (j, x) in v.iter_mut().enumerate() {
                let (c, moved) = inner.clamp_axis(j, *x);
                *x = c;
                clamps += usize::from(moved);
            }
            Ok(VEval {
                value: b.value(&v)?,
                clamps,
            })
        }
        Err(e) => Err(e),
    }
}

/// Free-function form of [`ComposedV::eval`].
pub fn compose_v(v: &ComposedV, x: &[f64], t: f64, rule: &GaussHermite) -> Result<VEval> {
    v.eval(x, t, rule)
}
