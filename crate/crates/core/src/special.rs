//! Standard normal density, distribution function and quantile.

use crate::error::{Error, Result};

pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// `Φ(x)`, accurate in both tails (computed through `erfc`).
#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// `Φ⁻¹(s)` for `s ∈ (0, 1)`.
pub fn norm_inv(s: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::domain(format!("inverse normal CDF argument {s} outside (0, 1)")));
    }
    Ok(norm_inv_unchecked(s))
}

/// Quantile without the domain check; returns `±∞` at the endpoints.
pub fn norm_inv_unchecked(s: f64) -> f64 {
    if s <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if s >= 1.0 {
        return f64::INFINITY;
    }
    if s > 0.5 {
        // 1 - s is exact here, and the lower tail is the accurate side.
        return -norm_inv_unchecked(1.0 - s);
    }
    let mut x = acklam(s);
    // Halley steps on Φ(x) - s; two are enough from Acklam's start.
    for _ in 0..3 {
        let e = norm_cdf(x) - s;
        let u = e * SQRT_2PI * (0.5 * x * x).exp();
        let step = u / (1.0 + 0.5 * x * u);
        x -= step;
        if step.abs() <= 1e-16 * x.abs().max(1.0) {
            break;
        }
    }
    x
}

/// Acklam's rational approximation, relative error about 1e-9.
fn acklam(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;
    use proptest::prelude::*;

    #[test]
    fn symmetric_points() {
        assert_eq!(norm_cdf(0.0), 0.5);
        assert_eq!(norm_inv(0.5).unwrap(), 0.0);
    }

    #[test]
    fn cdf_at_one_matches_quadrature() {
        let q = integrate(norm_pdf, f64::NEG_INFINITY, 1.0, 1e-15, 1e-15);
        assert!((q.value - 0.841_344_746_068_542_9).abs() < 1e-14);
        assert!((norm_cdf(1.0) - q.value).abs() < 1e-14);
    }

    #[test]
    fn quantile_rejects_endpoints() {
        for s in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(norm_inv(s), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn deep_tail_round_trip() {
        for s in [1e-300, 1e-100, 1e-20, 1e-8] {
            let x = norm_inv(s).unwrap();
            assert!(((norm_cdf(x) - s) / s).abs() < 1e-12, "s={s}");
        }
    }

    proptest! {
        #[test]
        fn round_trip(s in 1e-8..(1.0 - 1e-8)) {
            let x = norm_inv(s).unwrap();
            prop_assert!((norm_cdf(x) - s).abs() <= 1e-12);
        }

        #[test]
        fn cdf_increasing(a in -30.0..30.0f64, d in 1e-3..5.0f64) {
            prop_assert!(norm_cdf(a + d) >= norm_cdf(a));
        }
    }
}
