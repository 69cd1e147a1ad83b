//! Tabulated f_r for grid bases.
//!
//! A piecewise-linear density is a sum of hat functions, and each hat convolved
//! with N(0, r²) has a closed form. The table holds f_r and its first three
//! derivatives on a lattice of spacing h ≤ r/32 (computed by FFT convolution
//! with the sampled hat kernels) and interpolates with cubic Hermite pieces.
//! Beyond the table, log f_r is continued as a Gaussian tail of variance r².

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::distributions::GridPdf;
use crate::model::PointEval;
use crate::special::{std_normal_cdf, std_normal_pdf};

/// Table nodes per smoothing radius, at least.
const NODES_PER_RADIUS: f64 = 32.0;
/// Kernel reach in radii.
const KERNEL_REACH: f64 = 38.0;
/// Padding around the base support, in radii.
const PAD: f64 = 12.0;
/// Table entries below this fraction of the peak are dropped (FFT round-off floor).
const RELATIVE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone)]
pub(crate) struct Table {
    start: f64,
    h: f64,
    r: f64,
    nodes: Vec<[f64; 4]>,
}

/// Φ(t/r), φ_r(t), φ_r'(t), φ_r''(t).
#[inline]
fn gauss_terms(t: f64, r: f64) -> [f64; 4] {
    let z = t / r;
    let p = std_normal_pdf(z) / r;
    [std_normal_cdf(z), p, -z / r * p, (z * z - 1.0) / (r * r) * p]
}

/// Ψ(t) = t Φ(t/r) + r² φ_r(t) for t ≤ dx (the antiderivative of Φ(·/r)).
#[inline]
fn psi(t: f64, r: f64) -> f64 {
    let z = t / r;
    r * (std_normal_pdf(z) + z * std_normal_cdf(z))
}

/// Full hat of half-width dx convolved with N(0, r²), and its first three derivatives, at t ≤ 0.
fn hat_kernel_left(t: f64, dx: f64, r: f64) -> [f64; 4] {
    let gp = gauss_terms(t + dx, r);
    let g0 = gauss_terms(t, r);
    let gm = gauss_terms(t - dx, r);
    let second = |i: usize| (gp[i] - 2.0 * g0[i] + gm[i]) / dx;
    [(psi(t + dx, r) - 2.0 * psi(t, r) + psi(t - dx, r)) / dx, second(0), second(1), second(2)]
}

fn hat_kernel(t: f64, dx: f64, r: f64) -> [f64; 4] {
    if t <= 0.0 {
        hat_kernel_left(t, dx, r)
    } else {
        let k = hat_kernel_left(-t, dx, r);
        [k[0], -k[1], k[2], -k[3]]
    }
}

/// Left half-hat (support [−dx, 0], rising to 1 at 0) convolved with N(0, r²), with derivatives.
fn left_half_kernel(t: f64, dx: f64, r: f64) -> [f64; 4] {
    let a = gauss_terms(t + dx, r);
    let b = gauss_terms(t, r);
    let psi_full = |u: f64| {
        if u <= dx {
            psi(u, r)
        } else {
            // Ψ(u) = u + Ψ(−u)
            u + psi(-u, r)
        }
    };
    [
        (psi_full(t + dx) - psi_full(t)) / dx - b[0],
        (a[0] - b[0]) / dx - b[1],
        (a[1] - b[1]) / dx - b[2],
        (a[2] - b[2]) / dx - b[3],
    ]
}

fn convolve(signal: &[f64], kernel: &[f64], planner: &mut FftPlanner<f64>) -> Vec<f64> {
    let len = (signal.len() + kernel.len() - 1).next_power_of_two();
    let fft = planner.plan_fft_forward(len);
    let ifft = planner.plan_fft_inverse(len);
    let mut a: Vec<Complex<f64>> = signal.iter().map(|&v| Complex::new(v, 0.0)).collect();
    a.resize(len, Complex::new(0.0, 0.0));
    let mut b: Vec<Complex<f64>> = kernel.iter().map(|&v| Complex::new(v, 0.0)).collect();
    b.resize(len, Complex::new(0.0, 0.0));
    fft.process(&mut a);
    fft.process(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= *y;
    }
    ifft.process(&mut a);
    let scale = 1.0 / len as f64;
    a.iter().take(signal.len() + kernel.len() - 1).map(|c| c.re * scale).collect()
}

impl Table {
    pub(crate) fn new(g: &GridPdf, r: f64) -> Self {
        let dx = g.dx();
        let m = ((NODES_PER_RADIUS * dx / r).ceil() as usize).max(1);
        let h = dx / m as f64;
        let k_nodes = g.density().len();
        let pad = (PAD * r / h).ceil() as usize;
        let reach = (KERNEL_REACH * r / h).ceil() as usize + m;

        let sig_len = (k_nodes - 1) * m + 1;
        let mut signal = vec![0.0; sig_len];
        for (k, &v) in g.density().iter().enumerate() {
            signal[k * m] = v;
        }
        let kern: Vec<[f64; 4]> = (0..=2 * reach).map(|q| hat_kernel((q as f64 - reach as f64) * h, dx, r)).collect();
        let mut planner = FftPlanner::new();
        let conv: Vec<Vec<f64>> = (0..4)
            .map(|d| {
                let kd: Vec<f64> = kern.iter().map(|k| k[d]).collect();
                convolve(&signal, &kd, &mut planner)
            })
            .collect();

        let n_table = sig_len + 2 * pad;
        let start = g.x0() - pad as f64 * h;
        let first = g.density()[0];
        let last = g.density()[k_nodes - 1];
        let x_end = g.x_end();
        let mut nodes: Vec<[f64; 4]> = (0..n_table)
            .map(|j| {
                let idx = j + reach - pad;
                let mut v = [conv[0][idx], conv[1][idx], conv[2][idx], conv[3][idx]];
                let x = start + j as f64 * h;
                // end nodes carry half-hats: remove the missing halves
                if first != 0.0 {
                    let c = left_half_kernel(x - g.x0(), dx, r);
                    for d in 0..4 {
                        v[d] -= first * c[d];
                    }
                }
                if last != 0.0 {
                    let c = left_half_kernel(-(x - x_end), dx, r);
                    let sign = [1.0, -1.0, 1.0, -1.0];
                    for d in 0..4 {
                        v[d] -= last * sign[d] * c[d];
                    }
                }
                v
            })
            .collect();

        let peak = nodes.iter().map(|v| v[0]).fold(0.0, f64::max);
        let floor = RELATIVE_FLOOR * peak;
        let lo = nodes.iter().position(|v| v[0] > floor).unwrap_or(0);
        let hi = nodes.iter().rposition(|v| v[0] > floor).unwrap_or(n_table - 1);
        nodes.truncate(hi + 1);
        nodes.drain(..lo);
        for v in nodes.iter_mut() {
            // interior values under the round-off floor (wide gaps in the base)
            if v[0] <= floor {
                *v = [floor, 0.0, 0.0, 0.0];
            }
        }
        Self { start: start + lo as f64 * h, h, r, nodes }
    }

    pub(crate) fn range(&self) -> (f64, f64) {
        (self.start, self.start + self.h * (self.nodes.len() - 1) as f64)
    }

    pub(crate) fn spacing(&self) -> f64 {
        self.h
    }

    pub(crate) fn node_points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.nodes.len()).map(move |j| self.start + j as f64 * self.h)
    }

    fn tail(&self, node: usize, d: f64) -> PointEval {
        let v = self.nodes[node];
        let s0 = v[1] / v[0];
        let inv_r2 = 1.0 / (self.r * self.r);
        PointEval { log_pdf: v[0].ln() + s0 * d - 0.5 * d * d * inv_r2, score: s0 - d * inv_r2, score_deriv: -inv_r2 }
    }

    #[inline]
    pub(crate) fn eval(&self, x: f64) -> PointEval {
        let u = (x - self.start) / self.h;
        let last = self.nodes.len() - 1;
        if !(u >= 0.0) {
            return self.tail(0, x - self.start);
        }
        if u >= last as f64 {
            return self.tail(last, x - (self.start + last as f64 * self.h));
        }
        let k = u.floor() as usize;
        let t = u - k as f64;
        let (a, b) = (self.nodes[k], self.nodes[k + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = (t3 - 2.0 * t2 + t) * self.h;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = (t3 - t2) * self.h;
        let f0 = h00 * a[0] + h10 * a[1] + h01 * b[0] + h11 * b[1];
        let f1 = h00 * a[1] + h10 * a[2] + h01 * b[1] + h11 * b[2];
        let f2 = h00 * a[2] + h10 * a[3] + h01 * b[2] + h11 * b[3];
        if !(f0 > 0.0) {
            let node = if t < 0.5 { k } else { k + 1 };
            return self.tail(node, x - (self.start + node as f64 * self.h));
        }
        let s = f1 / f0;
        PointEval { log_pdf: f0.ln(), score: s, score_deriv: f2 / f0 - s * s }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate, Tolerance};
    use crate::special::normal_pdf;

    #[test]
    fn half_kernels_sum_to_full_hat() {
        let (dx, r) = (0.1, 0.3);
        for &t in &[-1.0, -0.05, 0.0, 0.07, 0.9] {
            let left = left_half_kernel(t, dx, r);
            let right = left_half_kernel(-t, dx, r);
            let full = hat_kernel(t, dx, r);
            let sign = [1.0, -1.0, 1.0, -1.0];
            for d in 0..4 {
                assert!((left[d] + sign[d] * right[d] - full[d]).abs() < 1e-12, "t={t} d={d}");
            }
        }
    }

    #[test]
    fn hat_kernel_matches_quadrature() {
        let (dx, r) = (0.2, 0.15);
        for &t in &[-0.7, -0.1, 0.0, 0.25] {
            let exact = integrate(
                |y| (1.0 - y.abs() / dx).max(0.0) * normal_pdf(t - y, r),
                &[-dx, 0.0, dx],
                Tolerance::default(),
            )
            .unwrap()
            .value;
            assert!((hat_kernel(t, dx, r)[0] - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_grid_smooths_to_erf_difference() {
        // Uniform on [0, 1] with linear ramps of width dx at the ends.
        let dx = 0.01;
        let n = 101;
        let dens = vec![1.0; n];
        let g = GridPdf::normalized(0.0, dx, dens).unwrap();
        let r = 0.05;
        let t = Table::new(&g, r);
        for &x in &[-0.1, 0.0, 0.3, 0.5, 1.02] {
            let exact =
                integrate(|y| g.pdf(y) * normal_pdf(x - y, r), &[0.0, 0.01, 0.5, 0.99, 1.0], Tolerance::default())
                    .unwrap()
                    .value;
            let got = t.eval(x).log_pdf.exp();
            assert!((got - exact).abs() < 1e-9 * exact.max(1e-3), "x={x}: {got} vs {exact}");
        }
    }
}
