//! Gauss–Hermite rules for the standard Gaussian measure and a global
//! adaptive Gauss–Kronrod integrator.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::special::norm_pdf;

/// Beyond this the outermost Hermite-function values underflow.
pub const MAX_GH_ORDER: usize = 600;

/// Gauss–Hermite rule for `∫ f dγ₁`, i.e. weight `e^{-y²/2}/√(2π)`.
/// Nodes are stored in ascending order and exactly mirrored.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(order: usize) -> Self {
        assert!((1..=MAX_GH_ORDER).contains(&order), "Gauss–Hermite order must lie in 1..={MAX_GH_ORDER}");
        let (z, w) = physicists_rule(order);
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let sqrt_pi = std::f64::consts::PI.sqrt();
        // z is descending and covers the non-negative half.
        for (i, (&zi, &wi)) in z.iter().zip(&w).enumerate() {
            let x = std::f64::consts::SQRT_2 * zi;
            let wt = wi / sqrt_pi;
            nodes[order - 1 - i] = x;
            weights[order - 1 - i] = wt;
            nodes[i] = -x;
            weights[i] = wt;
        }
        if order % 2 == 1 {
            nodes[order / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `∫ f dγ₁`.
    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// `∫ f dγ_dim` by the tensor rule; points are visited with the last
    /// coordinate varying fastest.
    pub fn expect_nd(&self, dim: usize, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
        assert!(dim >= 1, "dimension must be positive");
        let m = self.order();
        let mut idx = vec![0usize; dim];
        let mut point: Vec<f64> = vec![self.nodes[0]; dim];
        let mut total = 0.0;
        loop {
            let w: f64 = idx.iter().map(|&i| self.weights[i]).product();
            total += w * f(&point);
            let mut d = dim;
            loop {
                if d == 0 {
                    return total;
                }
                d -= 1;
                idx[d] += 1;
                if idx[d] < m {
                    point[d] = self.nodes[idx[d]];
                    break;
                }
                idx[d] = 0;
                point[d] = self.nodes[0];
            }
        }
    }
}

/// Roots and weights for `e^{-x²}`, non-negative half, descending.
fn physicists_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let pim4 = std::f64::consts::PI.powf(-0.25);
    let m = n.div_ceil(2);
    let nf = n as f64;
    let mut roots = vec![0.0; m];
    let mut weights = vec![0.0; m];
    // Golub–Welsch eigenvalues seed the Newton iteration.
    let jacobi = nalgebra::DMatrix::from_fn(n, n, |r, c| {
        if r.abs_diff(c) == 1 {
            (r.max(c) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let mut seeds: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
    seeds.sort_by(|a, b| b.total_cmp(a));
    for i in 0..m {
        let mut z = seeds[i];
        let mut pp = 0.0;
        for _ in 0..200 {
            // Hermite functions carry the e^{-z²/2} factor so the recurrence
            // stays bounded for large n.
            let mut p1 = pim4 * (-0.5 * z * z).exp();
            let mut p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        roots[i] = z;
        weights[i] = 2.0 * (-z * z).exp() / (pp * pp);
    }
    if n % 2 == 1 {
        roots[m - 1] = 0.0;
    }
    (roots, weights)
}

/// Result of an adaptive integration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integral {
    pub value: f64,
    /// Sum of the per-panel Gauss/Kronrod discrepancies.
    pub error: f64,
    pub converged: bool,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_PANELS: usize = 4000;

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

/// `∫_a^b f`, with either bound allowed to be infinite.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Integral {
    if a == b {
        return Integral {
            value: 0.0,
            error: 0.0,
            converged: true,
        };
    }
    if a > b {
        let r = integrate(f, b, a, abs_tol, rel_tol);
        return Integral { value: -r.value, ..r };
    }
    match (a.is_finite(), b.is_finite()) {
        (true, true) => adaptive(&f, a, b, abs_tol, rel_tol),
        (true, false) => adaptive(
            &|t: f64| {
                let x = a + t / (1.0 - t);
                f(x) / ((1.0 - t) * (1.0 - t))
            },
            0.0,
            1.0,
            abs_tol,
            rel_tol,
        ),
        (false, true) => adaptive(
            &|t: f64| {
                let x = b - t / (1.0 - t);
                f(x) / ((1.0 - t) * (1.0 - t))
            },
            0.0,
            1.0,
            abs_tol,
            rel_tol,
        ),
        (false, false) => adaptive(
            &|t: f64| {
                let d = 1.0 - t * t;
                let x = t / d;
                f(x) * (1.0 + t * t) / (d * d)
            },
            -1.0,
            1.0,
            abs_tol,
            rel_tol,
        ),
    }
}

fn adaptive(f: &impl Fn(f64) -> f64, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Integral {
    let (v, e) = gk15(f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value: v, error: e });
    let mut value = v;
    let mut error = e;
    let mut panels = 1;
    while error > abs_tol.max(rel_tol * value.abs()) {
        if panels >= MAX_PANELS {
            return Integral {
                value,
                error,
                converged: false,
            };
        }
        let worst = heap.pop().expect("heap never empties");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            heap.push(worst);
            break;
        }
        let (v1, e1) = gk15(f, worst.a, mid);
        let (v2, e2) = gk15(f, mid, worst.b);
        value += v1 + v2 - worst.value;
        error += e1 + e2 - worst.error;
        heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2 });
        panels += 1;
    }
    // Re-sum in a fixed order so the result does not carry the running
    // update's cancellation error.
    let mut parts: Vec<Panel> = heap.into_vec();
    parts.sort_by(|p, q| p.a.total_cmp(&q.a));
    let value = parts.iter().map(|p| p.value).sum();
    let error: f64 = parts.iter().map(|p| p.error).sum();
    Integral {
        value,
        error,
        converged: error <= abs_tol.max(rel_tol * f64::abs(value)),
    }
}

/// `∫ f dγ₁` by adaptive quadrature.
pub fn gaussian_expect(f: impl Fn(f64) -> f64, tol: f64) -> Integral {
    integrate(
        |x| {
            let w = norm_pdf(x);
            if w == 0.0 {
                0.0
            } else {
                f(x) * w
            }
        },
        f64::NEG_INFINITY,
        f64::INFINITY,
        tol,
        tol,
    )
}

/// `∫ f dγ₂` by nested adaptive quadrature; suited to discontinuous data.
pub fn gaussian_expect_2d(f: impl Fn(f64, f64) -> f64, tol: f64) -> Integral {
    let inner_tol = 0.1 * tol;
    let inner_error = std::cell::Cell::new(0.0_f64);
    let inner_ok = std::cell::Cell::new(true);
    let outer = gaussian_expect(
        |x| {
            let r = gaussian_expect(|y| f(x, y), inner_tol);
            inner_error.set(inner_error.get().max(r.error));
            inner_ok.set(inner_ok.get() && r.converged);
            r.value
        },
        tol,
    );
    Integral {
        value: outer.value,
        error: outer.error + inner_error.get(),
        converged: outer.converged && inner_ok.get(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn gh_moments() {
        for order in [16, 64, 128, 256] {
            let r = GaussHermite::new(order);
            assert!((r.weights().iter().sum::<f64>() - 1.0).abs() < 1e-13, "order {order}");
            assert!(r.expect(|x| x).abs() < 1e-12);
            assert!(r.expect(|x| x * x * x).abs() < 1e-12);
            assert!((r.expect(|x| x * x) - 1.0).abs() < 1e-12, "order {order}");
            assert!((r.expect(|x| x.powi(4)) - 3.0).abs() < 1e-11);
        }
    }

    #[test]
    fn gh_nodes_mirror() {
        let r = GaussHermite::new(7);
        let n = r.nodes();
        for i in 0..7 {
            assert_eq!(n[i], -n[6 - i]);
        }
        assert_eq!(n[3], 0.0);
        assert!(n.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn gh_mgf() {
        let r = GaussHermite::new(64);
        for c in [0.5, 1.0, 2.0] {
            let v = r.expect(|x| (c * x).exp());
            assert!((v / (0.5 * c * c).exp() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tensor_second_moment() {
        let r = GaussHermite::new(12);
        let v = r.expect_nd(3, |x| x.iter().map(|v| v * v).sum());
        assert!((v - 3.0).abs() < 1e-12);
        let w = r.expect_nd(2, |x| x[0] * x[1]);
        assert!(w.abs() < 1e-14);
    }

    #[test]
    fn adaptive_polynomial_and_infinite() {
        let r = integrate(|x| x * x, 0.0, 3.0, 1e-14, 1e-14);
        assert!((r.value - 9.0).abs() < 1e-12);
        let g = integrate(norm_pdf, f64::NEG_INFINITY, f64::INFINITY, 1e-14, 1e-14);
        assert!((g.value - 1.0).abs() < 1e-13);
        let half = integrate(norm_pdf, 0.0, f64::INFINITY, 1e-14, 1e-14);
        assert!((half.value - 0.5).abs() < 1e-13);
        let rev = integrate(|x| x, 1.0, 0.0, 1e-14, 1e-14);
        assert!((rev.value + 0.5).abs() < 1e-15);
    }

    #[test]
    fn adaptive_handles_jump() {
        let r = integrate(|x| if x < 0.3 { 1.0 } else { 0.0 }, 0.0, 1.0, 1e-12, 1e-12);
        assert!((r.value - 0.3).abs() < 1e-11);
        assert!(r.converged);
    }

    #[test]
    fn nested_quadrant() {
        let r = gaussian_expect_2d(|x, y| if x < 0.0 && y < 0.0 { 1.0 } else { 0.0 }, 1e-11);
        assert!((r.value - 0.25).abs() < 1e-10);
    }

    proptest! {
        #[test]
        fn gh_exact_for_low_degree(c in prop::collection::vec(-1.0..1.0f64, 6)) {
            // Degree-5 polynomial; moments 1, 0, 1, 0, 3, 0.
            let r = GaussHermite::new(8);
            let v = r.expect(|x| c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci));
            let exact = c[0] + c[2] + 3.0 * c[4];
            prop_assert!((v - exact).abs() < 1e-12);
        }
    }
}
