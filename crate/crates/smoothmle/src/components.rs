//! Closed-form log-density, score and score derivative of analytic mixtures,
//! optionally convolved with N(0, r²).

use std::f64::consts::{FRAC_1_SQRT_2, LN_2};

use crate::distributions::{Component, Mixture};
use crate::error::{Result, SmleError};
use crate::model::PointEval;
use crate::special::{erfcx, LN_SQRT_2PI};

/// A component after (optional) smoothing.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Kernel {
    /// N(mean, var) with var > 0; `log_norm` = −½ ln(2π var).
    Normal { mean: f64, var: f64, inv_var: f64, log_norm: f64 },
    /// Laplace(loc, b) convolved with N(0, r²), r > 0.
    LaplaceSmooth { loc: f64, b: f64, r: f64, ln_4b: f64 },
    /// Laplace(loc, b) without smoothing.
    LaplaceSharp { loc: f64, b: f64, ln_2b: f64 },
}

impl Kernel {
    /// (ln f, s, s') at x.
    #[inline]
    fn eval(&self, x: f64) -> (f64, f64, f64) {
        match *self {
            Kernel::Normal { mean, inv_var, log_norm, .. } => {
                let y = x - mean;
                (log_norm - 0.5 * y * y * inv_var, -y * inv_var, -inv_var)
            }
            Kernel::LaplaceSharp { loc, b, ln_2b } => {
                let y = x - loc;
                let s = if y > 0.0 {
                    -1.0 / b
                } else if y < 0.0 {
                    1.0 / b
                } else {
                    0.0
                };
                (-y.abs() / b - ln_2b, s, 0.0)
            }
            Kernel::LaplaceSmooth { loc, b, r, ln_4b } => laplace_smooth_with(x - loc, b, r, ln_4b),
        }
    }
}

/// Laplace(b) ∗ N(0, r²) at offset y, as (ln f, s, s').
///
/// With c = r/b, t = y/r and zᵢ = (c ∓ t)/√2,
/// f = e^{−t²/2}(erfcx(z₁) + erfcx(z₂))/(4b).
#[cfg(test)]
fn laplace_smooth(y: f64, b: f64, r: f64) -> (f64, f64, f64) {
    laplace_smooth_with(y, b, r, (4.0 * b).ln())
}

#[inline]
fn laplace_smooth_with(y: f64, b: f64, r: f64, ln_4b: f64) -> (f64, f64, f64) {
    let c = r / b;
    let t = y / r;
    if t.abs() >= c + 9.0 {
        // One erfc term is 2 and the other is below 1e−17 of it: plain shifted Laplace.
        return (0.5 * c * c - y.abs() / b - ln_4b + LN_2, -y.signum() / b, 0.0);
    }
    // both arguments exceed −9/√2 here, so erfcx stays below e^{41}
    let a1 = erfcx((c - t) * FRAC_1_SQRT_2);
    let a2 = erfcx((c + t) * FRAC_1_SQRT_2);
    let sum = a1 + a2;
    let log_f = -0.5 * t * t + sum.ln() - ln_4b;
    let bs = b * sum;
    let s = (a2 - a1) / bs;
    let ds = 4.0 * a1 * a2 / (bs * bs) - 2.0 * SQRT_2_OVER_PI / (r * bs);
    (log_f, s, ds)
}

const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

/// Mixture of kernels with log-weights.
#[derive(Debug, Clone)]
pub(crate) struct KernelMixture {
    log_w: Vec<f64>,
    kernels: Vec<Kernel>,
}

impl KernelMixture {
    /// Smoothed (r > 0) or raw (r = 0) version of an analytic mixture.
    pub(crate) fn new(mix: &Mixture, r: f64) -> Result<Self> {
        let mut log_w = Vec::new();
        let mut kernels = Vec::new();
        for (w, c) in mix.iter() {
            let k = match c {
                Component::Normal { mean, sigma } => {
                    let var = sigma * sigma + r * r;
                    if var <= 0.0 {
                        return Err(SmleError::AtomDensityUndefined(mean));
                    }
                    Kernel::Normal { mean, var, inv_var: 1.0 / var, log_norm: -0.5 * var.ln() - LN_SQRT_2PI }
                }
                Component::Laplace { loc, scale } => {
                    if r > 0.0 {
                        Kernel::LaplaceSmooth { loc, b: scale, r, ln_4b: (4.0 * scale).ln() }
                    } else {
                        Kernel::LaplaceSharp { loc, b: scale, ln_2b: (2.0 * scale).ln() }
                    }
                }
            };
            log_w.push(w.ln());
            kernels.push(k);
        }
        Ok(Self { log_w, kernels })
    }

    #[inline]
    pub(crate) fn eval(&self, x: f64) -> PointEval {
        if self.kernels.len() == 1 {
            let (log_pdf, score, score_deriv) = self.kernels[0].eval(x);
            return PointEval { log_pdf, score, score_deriv };
        }
        let n = self.kernels.len();
        if n <= 8 {
            let mut buf = [(0.0, 0.0, 0.0); 8];
            self.combine(x, &mut buf[..n])
        } else {
            let mut buf = vec![(0.0, 0.0, 0.0); n];
            self.combine(x, &mut buf)
        }
    }

    #[inline]
    fn combine(&self, x: f64, parts: &mut [(f64, f64, f64)]) -> PointEval {
        let mut m = f64::NEG_INFINITY;
        for (i, k) in self.kernels.iter().enumerate() {
            let (lf, s, ds) = k.eval(x);
            let lw = lf + self.log_w[i];
            parts[i] = (lw, s, ds);
            m = m.max(lw);
        }
        let mut total = 0.0;
        for p in parts.iter_mut() {
            let d = p.0 - m;
            // e^{−40} is below the rounding of the dominant term
            p.0 = if d < -40.0 { 0.0 } else { d.exp() };
            total += p.0;
        }
        let mut s = 0.0;
        for p in parts.iter() {
            s += p.0 * p.1;
        }
        s /= total;
        let mut ds = 0.0;
        for p in parts.iter() {
            let d = p.1 - s;
            ds += p.0 * (p.2 + d * d);
        }
        ds /= total;
        let log_pdf = if total == 1.0 { m } else { m + total.ln() };
        PointEval { log_pdf, score: s, score_deriv: ds }
    }

    /// Quadrature breakpoints resolving every component; the outermost points bound the
    /// region where the density exceeds ~1e−300 of its peak.
    pub(crate) fn breakpoints(&self) -> Vec<f64> {
        let mut pts = Vec::new();
        for k in &self.kernels {
            match *k {
                Kernel::Normal { mean, var, .. } => {
                    let sd = var.sqrt();
                    for m in [0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 16.0, 24.0, 32.0, 38.0] {
                        pts.push(mean - m * sd);
                        pts.push(mean + m * sd);
                    }
                }
                Kernel::LaplaceSmooth { loc, b, r, .. } => {
                    for m in [0.0, 0.5, 1.0, 2.0, 4.0, 8.0] {
                        pts.push(loc - m * r);
                        pts.push(loc + m * r);
                    }
                    for m in [0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0, 512.0] {
                        pts.push(loc - m * b);
                        pts.push(loc + m * b);
                    }
                    let reach = 700.0 * b + 38.0 * r;
                    pts.push(loc - reach);
                    pts.push(loc + reach);
                }
                Kernel::LaplaceSharp { loc, b, .. } => {
                    pts.push(loc);
                    for m in [0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0, 512.0, 700.0] {
                        pts.push(loc - m * b);
                        pts.push(loc + m * b);
                    }
                }
            }
        }
        let lo = pts.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = pts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        pts.retain(|p| *p >= lo && *p <= hi);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// Candidate points for locating regions where s' > 0, on per-component lattices.
    pub(crate) fn scan_lattice(&self) -> Vec<f64> {
        let mut pts = Vec::new();
        for k in &self.kernels {
            let (c, scale) = match *k {
                Kernel::Normal { mean, var, .. } => (mean, var.sqrt()),
                Kernel::LaplaceSmooth { loc, r, .. } => (loc, r),
                Kernel::LaplaceSharp { loc, b, .. } => (loc, b),
            };
            for j in -640..=640 {
                pts.push(c + scale * j as f64 / 16.0);
            }
            if let Kernel::LaplaceSmooth { loc, b, .. } = *k {
                for j in -640..=640 {
                    pts.push(loc + b * j as f64 / 16.0);
                }
            }
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate, Tolerance};
    use crate::special::normal_pdf;

    fn brute_laplace_smooth(x: f64, b: f64, r: f64) -> f64 {
        // ∫ e^{−|y|/b}/(2b) φ_r(x − y) dy by quadrature
        let pts: Vec<f64> = [-60.0, -30.0, -10.0, -3.0, -1.0, 0.0, 1.0, 3.0, 10.0, 30.0, 60.0]
            .iter()
            .map(|t| t * b)
            .chain([x - 10.0 * r, x, x + 10.0 * r])
            .collect();
        integrate(|y| (-y.abs() / b).exp() / (2.0 * b) * normal_pdf(x - y, r), &pts, Tolerance::default())
            .unwrap()
            .value
    }

    #[test]
    fn laplace_smooth_matches_quadrature() {
        for &(b, r) in &[(1.0, 0.1), (1.0, 1.0), (0.3, 2.0), (2.0, 0.01)] {
            for &x in &[-5.0, -1.0, -0.05, 0.0, 0.02, 0.7, 3.0, 12.0] {
                let (lf, _, _) = laplace_smooth(x, b, r);
                let exact = brute_laplace_smooth(x, b, r);
                assert!(
                    (lf.exp() - exact).abs() <= 1e-10 * exact.max(1e-300),
                    "b={b} r={r} x={x}: {} vs {exact}",
                    lf.exp()
                );
            }
        }
    }

    #[test]
    fn laplace_smooth_derivatives_match_differences() {
        let (b, r) = (1.0, 0.2);
        for &x in &[-3.0, -0.3, 0.0, 0.1, 0.5, 2.5, 40.0, -200.0] {
            let h = 1e-5;
            let (lp, sp, _) = laplace_smooth(x + h, b, r);
            let (lm, sm, _) = laplace_smooth(x - h, b, r);
            let (_, s, ds) = laplace_smooth(x, b, r);
            assert!((s - (lp - lm) / (2.0 * h)).abs() < 1e-6, "score at {x}");
            assert!((ds - (sp - sm) / (2.0 * h)).abs() < 1e-5, "deriv at {x}");
        }
    }

    #[test]
    fn far_tails_are_finite() {
        for &x in &[-1e4, -700.0, 700.0, 1e4] {
            let (lf, s, ds) = laplace_smooth(x, 1.0, 0.01);
            assert!(lf.is_finite() && s.is_finite() && ds.is_finite());
            assert!((s.abs() - 1.0).abs() < 1e-9);
        }
    }
}
