//! Normal-distribution helpers and a log-scaled complementary error function.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// 1/√(2π).
pub const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
/// ln √(2π).
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[inline]
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Standard normal density.
#[inline]
pub fn std_normal_pdf(z: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Standard normal CDF, accurate in the left tail.
#[inline]
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

/// Standard normal survival function, accurate in the right tail.
#[inline]
pub fn std_normal_sf(z: f64) -> f64 {
    0.5 * erfc(z * FRAC_1_SQRT_2)
}

/// Density of N(0, s²) at t.
#[inline]
pub fn normal_pdf(t: f64, s: f64) -> f64 {
    std_normal_pdf(t / s) / s
}

/// ln erfcx(z) = z² + ln erfc(z), finite for every finite z.
pub fn ln_erfcx(z: f64) -> f64 {
    if z < 20.0 {
        z * z + erfc(z).ln()
    } else {
        // Asymptotic series 1/(z√π) Σ (−1)^k (2k−1)!! / (2z²)^k.
        let w = 1.0 / (2.0 * z * z);
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..8 {
            term *= -((2 * k - 1) as f64) * w;
            sum += term;
        }
        (sum / (z * PI.sqrt())).ln()
    }
}

/// Scaled complementary error function e^{z²} erfc(z); overflows to +∞ for z ≲ −26.6.
pub fn erfcx(z: f64) -> f64 {
    if z < 20.0 {
        (z * z).exp() * erfc(z)
    } else {
        ln_erfcx(z).exp()
    }
}

/// ln(e^a + e^b) without overflow.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// ln Σ e^{xᵢ}; −∞ for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_values() {
        assert!((std_normal_pdf(0.0) - 0.398_942_280_401_432_7).abs() < 1e-16);
        assert!((std_normal_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-15);
        assert!((std_normal_sf(5.0) - 2.866_515_718_791_939e-7).abs() < 1e-20);
        assert!((LN_SQRT_2PI - (2.0 * PI).sqrt().ln()).abs() < 1e-15);
    }

    #[test]
    fn ln_erfcx_is_continuous_across_branch() {
        let below = ln_erfcx(20.0 - 1e-12);
        let above = ln_erfcx(20.0);
        assert!((below - above).abs() < 1e-12, "{below} vs {above}");
        // erfcx(0) = 1, erfcx(1) = 0.42758357615580700
        assert!(ln_erfcx(0.0).abs() < 1e-16);
        assert!((erfcx(1.0) - 0.427_583_576_155_807).abs() < 1e-15);
        // large argument: erfcx(100) = 0.0056416006...
        assert!((erfcx(100.0) - 5.641_613_782_989_433e-3).abs() < 1e-17);
        assert!((ln_erfcx(-30.0) - (900.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn log_sum_exp_matches_direct() {
        let xs = [-1.0, 0.5, 2.0];
        let direct: f64 = xs.iter().map(|x: &f64| x.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(&xs) - direct).abs() < 1e-14);
        assert!((log_add_exp(-1000.0, -1000.0) - (-1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
    }
}
