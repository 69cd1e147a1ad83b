//! Two-point lower-bound machinery between p = f_r and its shifted copy
//! q(x) = f_r(x − shift): divergences, moments of the log-likelihood ratio
//! γ = log(q/p), the six sufficient conditions on (p, q, κ), a Monte Carlo
//! estimate of 1 − TV(p^⊗n, q^⊗n), and the indistinguishable shift.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, SmleError};
use crate::quadrature::{integrate, Tolerance};
use crate::rng::{stream, NoiseSource};
use crate::smoothing::SmoothedModel;
use crate::special::std_normal_sf;

/// Which distribution an expectation is taken under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Under {
    P,
    Q,
}

/// ∫ p(x) g(γ(x)) dx over the model's breakpoints and their shifted copies.
fn expect_gamma<G: Fn(f64) -> f64>(m: &SmoothedModel, shift: f64, g: G) -> Result<f64> {
    let mut pts: Vec<f64> = m.breakpoints().iter().flat_map(|&b| [b, b + shift]).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    Ok(integrate(
        |x| {
            let lp = m.log_pdf(x);
            let p = lp.exp();
            if p == 0.0 {
                return 0.0;
            }
            let gamma = m.log_pdf(x - shift) - lp;
            p * g(gamma)
        },
        &pts,
        Tolerance::default(),
    )?
    .value)
}

/// KL(p ‖ q) = ∫ p (e^γ − 1 − γ), with a nonnegative integrand.
pub fn kl_divergence(m: &SmoothedModel, shift: f64) -> Result<f64> {
    if shift == 0.0 {
        return Ok(0.0);
    }
    Ok(expect_gamma(m, shift, |g| g.exp_m1() - g)?.max(0.0))
}

/// KL(q ‖ p); equals KL(p ‖ f_r(· + shift)).
pub fn kl_divergence_reverse(m: &SmoothedModel, shift: f64) -> Result<f64> {
    kl_divergence(m, -shift)
}

/// H² = ½∫(√p − √q)² = ½∫ p (e^{γ/2} − 1)².
pub fn hellinger_sq(m: &SmoothedModel, shift: f64) -> Result<f64> {
    if shift == 0.0 {
        return Ok(0.0);
    }
    let h = expect_gamma(m, shift, |g| {
        let d = (0.5 * g).exp_m1();
        0.5 * d * d
    })?;
    Ok(h.clamp(0.0, 1.0))
}

/// E|γ|^k under p or q (k ≥ 2).
pub fn loglik_moment(m: &SmoothedModel, shift: f64, k: u32, under: Under) -> Result<f64> {
    if k < 2 {
        return Err(SmleError::InvalidArgument(format!("moment order {k} must be ≥ 2")));
    }
    if shift == 0.0 {
        return Ok(0.0);
    }
    let k = k as i32;
    match under {
        Under::P => expect_gamma(m, shift, |g| g.abs().powi(k)),
        Under::Q => expect_gamma(m, shift, |g| g.exp() * g.abs().powi(k)),
    }
}

/// One sufficient condition with its measured ratio (left side over the nominal right side).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionCheck {
    pub index: u8,
    pub description: String,
    pub ratio: f64,
    pub passed: bool,
}

/// Moments of γ under both measures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentPair {
    pub p: f64,
    pub q: f64,
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TvEstimate {
    pub complement: f64,
    pub stderr: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowerBoundReport {
    pub r: f64,
    pub eps: f64,
    pub shift: f64,
    pub kappa: f64,
    pub kl_pq: f64,
    pub kl_qp: f64,
    pub hellinger_sq: f64,
    pub fisher_r: f64,
    pub gamma_moments: BTreeMap<u32, MomentPair>,
    pub conditions: Vec<ConditionCheck>,
    pub all_conditions_pass: bool,
    pub n: Option<usize>,
    pub delta_floor: Option<f64>,
    pub floor_constant: f64,
    pub tv_complement_estimate: Option<TvEstimate>,
}

/// Extra inputs for a full report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportOptions {
    /// Sample count for delta_floor and the TV estimate.
    pub n: Option<usize>,
    /// Constant C in delta_floor.
    pub floor_constant: f64,
    /// (trials, seed) for tv_product_mc; requires `n`.
    pub tv: Option<(usize, u64)>,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self { n: None, floor_constant: 1.0, tv: None }
    }
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

/// Checks the six conditions between p = f_r and q = f_r^{2ε} for orders 3..=kmax.
pub fn check_newlb_conditions(m: &SmoothedModel, eps: f64, kappa: f64, kmax: u32) -> Result<LowerBoundReport> {
    lower_bound_report(m, eps, kappa, kmax, &ReportOptions::default())
}

pub fn lower_bound_report(
    m: &SmoothedModel,
    eps: f64,
    kappa: f64,
    kmax: u32,
    opts: &ReportOptions,
) -> Result<LowerBoundReport> {
    if eps == 0.0 {
        return Err(SmleError::ShiftZero);
    }
    if !(kappa > 0.0) {
        return Err(SmleError::InvalidArgument(format!("kappa {kappa} must be > 0")));
    }
    if !(eps > 0.0 && eps <= m.r() / 4.0) {
        return Err(SmleError::OffsetTooLarge { eps, limit: m.r() / 4.0 });
    }
    if kmax < 3 {
        return Err(SmleError::InvalidArgument(format!("kmax {kmax} must be ≥ 3")));
    }
    let shift = 2.0 * eps;
    let kl_pq = kl_divergence(m, shift)?;
    let kl_qp = kl_divergence_reverse(m, shift)?;
    let h2 = hellinger_sq(m, shift)?;
    let mut moments = BTreeMap::new();
    for k in 2..=kmax {
        let p = loglik_moment(m, shift, k, Under::P)?;
        let q = loglik_moment(m, shift, k, Under::Q)?;
        moments.insert(k, MomentPair { p, q });
    }
    let lim = 1.0 + kappa;
    let mut conditions = Vec::with_capacity(6);
    let mut push = |index: u8, description: String, ratio: f64, passed: bool| {
        conditions.push(ConditionCheck { index, description, ratio, passed });
    };
    let r1 = h2 / (0.25 * kl_pq);
    push(1, "H^2(p,q) <= (1+kappa) KL(p||q)/4".into(), r1, r1 <= lim);
    let r2 = kl_pq / kl_qp;
    push(2, "KL(p||q)/KL(q||p) in [1/(1+kappa), 1+kappa]".into(), r2, r2 <= lim && r2 >= 1.0 / lim);
    let r3 = moments[&2].p / (2.0 * kl_pq);
    push(3, "E_p[gamma^2] <= (1+kappa) 2 KL(p||q)".into(), r3, r3 <= lim);
    let r4 = moments[&2].q / (2.0 * kl_pq);
    push(4, "E_q[gamma^2] <= (1+kappa) 2 KL(p||q)".into(), r4, r4 <= lim);
    let sub_gamma = |k: u32, v: f64| v / (factorial(k) / 2.0 * 2.0 * kl_pq * kappa.powi(k as i32 - 2));
    let r5 = (3..=kmax).map(|k| sub_gamma(k, moments[&k].p)).fold(0.0, f64::max);
    push(5, format!("E_p|gamma|^k <= (1+kappa) k!/2 2KL kappa^(k-2), k=3..{kmax}"), r5, r5 <= lim);
    let r6 = (3..=kmax).map(|k| sub_gamma(k, moments[&k].q)).fold(0.0, f64::max);
    push(6, format!("E_q|gamma|^k <= (1+kappa) k!/2 2KL kappa^(k-2), k=3..{kmax}"), r6, r6 <= lim);
    let all = conditions.iter().all(|c| c.passed);

    let delta_floor = opts.n.map(|n| delta_floor(n, kl_pq, kappa, opts.floor_constant));
    let tv = match (opts.n, opts.tv) {
        (Some(n), Some((trials, seed))) => Some(tv_product_mc(m, shift, n, trials, seed)?),
        (None, Some(_)) => return Err(SmleError::InvalidArgument("TV estimate needs n".into())),
        _ => None,
    };
    Ok(LowerBoundReport {
        r: m.r(),
        eps,
        shift,
        kappa,
        kl_pq,
        kl_qp,
        hellinger_sq: h2,
        fisher_r: m.fisher_info()?,
        gamma_moments: moments,
        conditions,
        all_conditions_pass: all,
        n: opts.n,
        delta_floor,
        floor_constant: opts.floor_constant,
        tv_complement_estimate: tv,
    })
}

/// 2·exp(−(1 + C·max(κ, 1/√(n·KL), KL))·n·KL/4). Diagnostic only.
pub fn delta_floor(n: usize, kl: f64, kappa: f64, c: f64) -> f64 {
    let nkl = n as f64 * kl;
    let slack = kappa.max(1.0 / nkl.sqrt()).max(kl);
    2.0 * (-(1.0 + c * slack) * nkl / 4.0).exp()
}

/// Monte Carlo estimate of 1 − TV(p^⊗n, q^⊗n) = E_{p^⊗n}[min(1, Π q/p)].
///
/// Each trial draws n points from f_r from its own derived stream and sums
/// γ in log space.
pub fn tv_product_mc(m: &SmoothedModel, shift: f64, n: usize, trials: usize, seed: u64) -> Result<TvEstimate> {
    if trials < 1000 {
        return Err(SmleError::InvalidArgument(format!("trials {trials} must be ≥ 1000")));
    }
    if n == 0 {
        return Err(SmleError::InvalidArgument("n must be ≥ 1".into()));
    }
    let r = m.r();
    let vals: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream(seed, "tv_product", &[n as u64, t as u64]);
            let ys = m.base().sample(n, &mut rng);
            let log_ratio: f64 = ys
                .iter()
                .map(|&y| {
                    let x = y + r * rng.standard_normal();
                    m.log_pdf(x - shift) - m.log_pdf(x)
                })
                .sum();
            if log_ratio >= 0.0 {
                1.0
            } else {
                log_ratio.exp()
            }
        })
        .collect();
    let t = trials as f64;
    let mean = vals.iter().sum::<f64>() / t;
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (t - 1.0);
    Ok(TvEstimate { complement: mean, stderr: (var / t).sqrt(), trials })
}

/// Exact 1 − TV(N(0,σ²)^⊗n, N(shift,σ²)^⊗n) = 2Q(shift·√n/(2σ)).
pub fn gaussian_tv_complement(shift: f64, sigma: f64, n: usize) -> f64 {
    2.0 * std_normal_sf(shift.abs() * (n as f64).sqrt() / (2.0 * sigma))
}

/// Leading indistinguishable half-shift ε = √(2 log(1/δ)/(n I_r)).
pub fn indistinguishable_shift(n: usize, delta: f64, fisher_r: f64) -> f64 {
    (2.0 * (1.0 / delta).ln() / (n as f64 * fisher_r)).sqrt()
}

/// Lower-order terms in the half-shift, each with unit constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShiftDiagnostics {
    pub leading: f64,
    /// √(log(1/δ)/n)/(r³ I_r^{3/2})
    pub smoothing_term: f64,
    /// 1/log(1/δ)
    pub confidence_term: f64,
    /// log(1/δ)/n
    pub sample_term: f64,
    /// leading·(1 − sum of the terms)
    pub corrected: f64,
}

pub fn indistinguishable_shift_diagnostics(n: usize, delta: f64, fisher_r: f64, r: f64) -> ShiftDiagnostics {
    let l = (1.0 / delta).ln();
    let nf = n as f64;
    let leading = indistinguishable_shift(n, delta, fisher_r);
    let smoothing_term = (l / nf).sqrt() / (r.powi(3) * fisher_r.powf(1.5));
    let confidence_term = 1.0 / l;
    let sample_term = l / nf;
    ShiftDiagnostics {
        leading,
        smoothing_term,
        confidence_term,
        sample_term,
        corrected: leading * (1.0 - smoothing_term - confidence_term - sample_term),
    }
}
