//! Location estimators: the local smoothed MLE (a root of the smoothed
//! empirical score on a given interval), the global two-stage MLE, the
//! minimal-smoothing solver, error-bound prediction and simple baselines.

use crate::argmax::{grid_argmax, LambdaGrid};
use crate::distributions::Distribution;
use crate::error::{Result, SmleError};
use crate::model::{LocationModel, RawModel};
use crate::rng::NoiseSource;
use crate::smoothing::SmoothedModel;

/// Size of the α grid used to pick the quantile interval.
pub const ALPHA_GRID: usize = 999;

/// Minimum number of bracket-scan points in the local MLE.
pub const MIN_SCAN_POINTS: usize = 64;

/// Estimator settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    /// Failure probability δ ∈ (0, 1).
    pub delta: f64,
    /// Slack γ ≥ 1 in the local convergence conditions.
    pub gamma: f64,
    /// Initial half-width ε_max.
    pub eps_max: f64,
    /// Fixed radius used instead of the r* rule.
    pub r_override: Option<f64>,
    /// (c₁, c₂) in r* = max(c₁(log(1/δ)/n)^{1/8}, c₂·2^{−√log₂(1/δ)})·IQR.
    pub rstar_constants: (f64, f64),
    /// Bisection tolerance on λ.
    pub root_tol: f64,
    pub beta: f64,
    pub eta: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            delta: 0.05,
            gamma: 1.0,
            eps_max: 0.1,
            r_override: None,
            rstar_constants: (1.0, 1.0),
            root_tol: 1e-9,
            beta: 1.0,
            eta: 1.0,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(SmleError::InvalidProbability(self.delta));
        }
        if !(self.root_tol > 0.0) {
            return Err(SmleError::InvalidArgument(format!("root_tol {} must be > 0", self.root_tol)));
        }
        if !(self.gamma >= 1.0) {
            return Err(SmleError::InvalidArgument(format!("gamma {} must be ≥ 1", self.gamma)));
        }
        let (c1, c2) = self.rstar_constants;
        if !(c1 > 0.0 && c2 > 0.0 && self.beta > 0.0 && self.eta > 0.0) {
            return Err(SmleError::InvalidArgument("r* constants, beta and eta must be > 0".into()));
        }
        if let Some(r) = self.r_override {
            if !(r > 0.0) {
                return Err(SmleError::InvalidRadius(r));
            }
        }
        Ok(())
    }
}

/// Non-fatal conditions met while estimating.
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// The score never changed sign; the estimate is the scan point with smallest |ŝ|.
    NoRootInInterval { min_abs_score: f64 },
    /// Only a down-crossing root (a likelihood minimum) was found.
    DownCrossingRoot,
    /// The quantile interval collapsed to a point and was padded by r/16.
    DegenerateInterval,
}

/// Output of the local and global MLE.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult {
    pub lambda_hat: f64,
    pub interval: (f64, f64),
    pub r_used: f64,
    pub fisher_r: f64,
    pub predicted_bound: f64,
    pub refinement_factor: f64,
    pub warnings: Vec<Warning>,
}

impl EstimateResult {
    pub fn root_found(&self) -> bool {
        !self.warnings.iter().any(|w| matches!(w, Warning::NoRootInInterval { .. }))
    }

    /// Converts a fallback estimate into `NoRootInInterval`.
    pub fn strict(self) -> Result<Self> {
        if self.root_found() {
            Ok(self)
        } else {
            Err(SmleError::NoRootInInterval { lo: self.interval.0, hi: self.interval.1, fallback: self.lambda_hat })
        }
    }
}

/// x'ᵢ = xᵢ + r·Zᵢ with Zᵢ drawn from `noise`.
pub fn perturb_samples<N: NoiseSource + ?Sized>(samples: &[f64], r: f64, noise: &mut N) -> Result<Vec<f64>> {
    if !(r > 0.0) {
        return Err(SmleError::InvalidRadius(r));
    }
    Ok(samples.iter().map(|&x| x + r * noise.standard_normal()).collect())
}

/// ŝ(λ) = Σ s_r(x'ᵢ − λ).
pub fn empirical_score<M: LocationModel + ?Sized>(m: &M, perturbed: &[f64], lambda: f64) -> f64 {
    perturbed.iter().map(|&x| m.score(x - lambda)).sum()
}

fn score_and_loglik(m: &SmoothedModel, perturbed: &[f64], lambda: f64) -> (f64, f64) {
    let mut s = 0.0;
    let mut l = 0.0;
    for &x in perturbed {
        let e = m.eval(x - lambda);
        s += e.score;
        l += e.log_pdf;
    }
    (s, l)
}

/// Leading error √(2 log(1/δ)/(n I)) and the refined factor
/// √(1 + η/γ) + (15/(2√γ))(2 log(1/δ)/n)^{1/4}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBound {
    pub leading: f64,
    pub refined_factor: f64,
}

pub fn error_bound(n: usize, delta: f64, fisher_r: f64, cfg: &EstimatorConfig) -> ErrorBound {
    let l = (1.0 / delta).ln();
    let n = n as f64;
    ErrorBound {
        leading: (2.0 * l / (n * fisher_r)).sqrt(),
        refined_factor: (1.0 + cfg.eta / cfg.gamma).sqrt() + 15.0 / (2.0 * cfg.gamma.sqrt()) * (2.0 * l / n).powf(0.25),
    }
}

/// Root of ŝ on [lo, hi] for already perturbed samples.
///
/// Scans max(64, ⌈(hi − lo)/(r/8)⌉) equally spaced points, prefers brackets
/// where ŝ goes from negative to nonnegative (likelihood maxima), picks the
/// one with the largest log-likelihood, and bisects it to `root_tol`.
pub fn local_mle_perturbed(
    m: &SmoothedModel,
    perturbed: &[f64],
    interval: (f64, f64),
    cfg: &EstimatorConfig,
) -> Result<EstimateResult> {
    cfg.validate()?;
    let (lo, hi) = interval;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(SmleError::InvalidArgument(format!("interval ({lo}, {hi}) must satisfy ℓ < u")));
    }
    if perturbed.is_empty() {
        return Err(SmleError::InvalidArgument("no samples".into()));
    }
    let r = m.r();
    let points = MIN_SCAN_POINTS.max(((hi - lo) / (r / 8.0)).ceil() as usize);
    let at = |j: usize| if j + 1 == points { hi } else { lo + (hi - lo) * j as f64 / (points - 1) as f64 };
    let scan: Vec<(f64, f64)> = (0..points).map(|j| score_and_loglik(m, perturbed, at(j))).collect();

    let mut up: Option<(usize, f64)> = None;
    let mut down: Option<(usize, f64)> = None;
    for j in 0..points - 1 {
        let (s0, l0) = scan[j];
        let (s1, l1) = scan[j + 1];
        let ll = l0.max(l1);
        if s0 < 0.0 && s1 >= 0.0 {
            if up.is_none_or(|(_, b)| ll > b) {
                up = Some((j, ll));
            }
        } else if s0 > 0.0 && s1 <= 0.0 && down.is_none_or(|(_, b)| ll > b) {
            down = Some((j, ll));
        }
    }
    let mut warnings = Vec::new();
    let lambda_hat = if let Some((j, _)) = up {
        bisect(m, perturbed, at(j), at(j + 1), cfg.root_tol, true)
    } else if let Some((j, _)) = down {
        warnings.push(Warning::DownCrossingRoot);
        bisect(m, perturbed, at(j), at(j + 1), cfg.root_tol, false)
    } else {
        let (j, s) = scan
            .iter()
            .enumerate()
            .map(|(j, v)| (j, v.0.abs()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty scan");
        warnings.push(Warning::NoRootInInterval { min_abs_score: s });
        at(j)
    };
    let fisher_r = m.fisher_info()?;
    let bound = error_bound(perturbed.len(), cfg.delta, fisher_r, cfg);
    Ok(EstimateResult {
        lambda_hat,
        interval,
        r_used: r,
        fisher_r,
        predicted_bound: bound.leading,
        refinement_factor: bound.refined_factor,
        warnings,
    })
}

/// Bisection keeping ŝ(a) < 0 ≤ ŝ(b) (or the reverse for a down-crossing).
fn bisect(m: &SmoothedModel, xs: &[f64], mut a: f64, mut b: f64, tol: f64, upward: bool) -> f64 {
    while b - a > tol {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let s = empirical_score(m, xs, mid);
        let left = if upward { s < 0.0 } else { s > 0.0 };
        if left {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// Local MLE: perturb the samples with N(0, r²) noise, then find a root of ŝ on the interval.
pub fn local_mle<N: NoiseSource + ?Sized>(
    f: &Distribution,
    r: f64,
    samples: &[f64],
    interval: (f64, f64),
    noise: &mut N,
    cfg: &EstimatorConfig,
) -> Result<EstimateResult> {
    let m = SmoothedModel::new(f, r)?;
    let perturbed = perturb_samples(samples, r, noise)?;
    local_mle_perturbed(&m, &perturbed, interval, cfg)
}

/// Quantile-interval choice that depends only on (f, n, δ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalPlan {
    pub alpha: f64,
    pub slack: f64,
    /// quantile(f, α − s)
    pub q_lo: f64,
    /// quantile(f, α + s)
    pub q_hi: f64,
}

impl IntervalPlan {
    pub fn new(f: &Distribution, n: usize, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(SmleError::InvalidProbability(delta));
        }
        let s = (2.0 * (4.0 / delta).ln() / n as f64).sqrt();
        if !(s < 0.5) {
            return Err(SmleError::SampleSizeTooSmall { s });
        }
        let step = (1.0 - 2.0 * s) / (ALPHA_GRID + 1) as f64;
        let mut cands = Vec::with_capacity(ALPHA_GRID);
        for j in 0..ALPHA_GRID {
            let alpha = if j == ALPHA_GRID / 2 { 0.5 } else { s + (j + 1) as f64 * step };
            let q_lo = f.quantile((alpha - s).max(f64::MIN_POSITIVE))?;
            let q_hi = f.quantile((alpha + s).min(1.0 - f64::EPSILON / 2.0))?;
            cands.push(Self { alpha, slack: s, q_lo, q_hi });
        }
        let width = |p: &Self| p.q_hi - p.q_lo;
        let best = cands.iter().map(width).fold(f64::INFINITY, f64::min);
        let tol = best.abs() * 1e-9 + 1e-15;
        Ok(*cands
            .iter()
            .filter(|p| width(p) <= best + tol)
            .min_by(|a, b| (a.alpha - 0.5).abs().total_cmp(&(b.alpha - 0.5).abs()).then(a.alpha.total_cmp(&b.alpha)))
            .expect("nonempty"))
    }

    /// (ℓ, u) = (x_α − q(α+s), x_α − q(α−s)) for the given samples.
    pub fn interval(&self, samples: &[f64]) -> Result<(f64, f64)> {
        if samples.is_empty() {
            return Err(SmleError::InvalidArgument("no samples".into()));
        }
        let x_alpha = empirical_quantile(samples, self.alpha);
        Ok((x_alpha - self.q_hi, x_alpha - self.q_lo))
    }
}

/// Order statistic x_(⌈αn⌉).
pub fn empirical_quantile(samples: &[f64], alpha: f64) -> f64 {
    let mut v = samples.to_vec();
    let n = v.len();
    let k = ((alpha * n as f64).ceil() as usize).clamp(1, n) - 1;
    let (_, x, _) = v.select_nth_unstable_by(k, f64::total_cmp);
    *x
}

/// Interval containing λ with probability ≥ 1 − δ/2, and the α used.
pub fn quantile_interval(f: &Distribution, samples: &[f64], delta: f64) -> Result<(f64, f64, f64)> {
    let plan = IntervalPlan::new(f, samples.len(), delta)?;
    let (l, u) = plan.interval(samples)?;
    Ok((l, u, plan.alpha))
}

/// r* = max(c₁(log(1/δ)/n)^{1/8}, c₂·2^{−√log₂(1/δ)})·IQR (IQR taken as 1 if zero).
pub fn choose_rstar(f: &Distribution, n: usize, delta: f64, cfg: &EstimatorConfig) -> f64 {
    let (c1, c2) = cfg.rstar_constants;
    let l = (1.0 / delta).ln();
    let first = c1 * (l / n as f64).powf(0.125);
    let second = c2 * 2f64.powf(-(1.0 / delta).log2().sqrt());
    let iqr = f.iqr();
    let scale = if iqr > 0.0 { iqr } else { 1.0 };
    first.max(second) * scale
}

/// Algorithm state reusable across sample sets of one size: interval plan and smoothed model.
#[derive(Debug, Clone)]
pub struct GlobalMle {
    plan: IntervalPlan,
    model: SmoothedModel,
    n: usize,
    cfg: EstimatorConfig,
}

impl GlobalMle {
    pub fn new(f: &Distribution, n: usize, cfg: &EstimatorConfig) -> Result<Self> {
        cfg.validate()?;
        let plan = IntervalPlan::new(f, n, cfg.delta)?;
        let r = cfg.r_override.unwrap_or_else(|| choose_rstar(f, n, cfg.delta, cfg));
        let model = SmoothedModel::new(f, r)?;
        model.fisher_info()?;
        Ok(Self { plan, model, n, cfg: *cfg })
    }

    pub fn model(&self) -> &SmoothedModel {
        &self.model
    }

    pub fn plan(&self) -> &IntervalPlan {
        &self.plan
    }

    pub fn estimate<N: NoiseSource + ?Sized>(&self, samples: &[f64], noise: &mut N) -> Result<EstimateResult> {
        if samples.len() != self.n {
            return Err(SmleError::InvalidArgument(format!(
                "prepared for n = {}, got {} samples",
                self.n,
                samples.len()
            )));
        }
        let (mut lo, mut hi) = self.plan.interval(samples)?;
        let r = self.model.r();
        let mut degenerate = false;
        if !(hi > lo) {
            lo -= r / 16.0;
            hi += r / 16.0;
            degenerate = true;
        }
        let perturbed = perturb_samples(samples, r, noise)?;
        let local_cfg = EstimatorConfig { delta: self.cfg.delta / 2.0, ..self.cfg };
        let mut res = local_mle_perturbed(&self.model, &perturbed, (lo, hi), &local_cfg)?;
        let bound = error_bound(self.n, self.cfg.delta, res.fisher_r, &self.cfg);
        res.predicted_bound = bound.leading;
        res.refinement_factor = bound.refined_factor;
        if degenerate {
            res.warnings.push(Warning::DegenerateInterval);
        }
        Ok(res)
    }
}

/// Two-stage MLE: quantile interval at δ/2, then local MLE with r* at δ/2.
pub fn global_mle<N: NoiseSource + ?Sized>(
    f: &Distribution,
    samples: &[f64],
    delta: f64,
    noise: &mut N,
    cfg: &EstimatorConfig,
) -> Result<EstimateResult> {
    let cfg = EstimatorConfig { delta, ..*cfg };
    GlobalMle::new(f, samples.len(), &cfg)?.estimate(samples, noise)
}

/// Which local-convergence condition a radius violates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmoothingCondition {
    /// r ≥ 2ε_max
    RadiusCoversOffset,
    /// r²√I_r ≥ γε_max
    CurvatureMargin,
    /// log(1/δ)/n ≤ 1/γ²
    SampleSize,
    /// log(1/(r√I_r)) ≤ (1/γ)·log(1/δ)/log log(1/δ)
    InformationRatio,
}

impl SmoothingCondition {
    pub fn label(&self) -> &'static str {
        match self {
            Self::RadiusCoversOffset => "r >= 2 eps_max",
            Self::CurvatureMargin => "r^2 sqrt(I_r) >= gamma eps_max",
            Self::SampleSize => "log(1/delta)/n <= 1/gamma^2",
            Self::InformationRatio => "log(1/(r sqrt(I_r))) <= log(1/delta)/(gamma log log(1/delta))",
        }
    }
}

/// Conditions violated at radius r with the given I_r.
pub fn smoothing_violations(
    r: f64,
    fisher_r: f64,
    eps_max: f64,
    delta: f64,
    n: usize,
    gamma: f64,
) -> Vec<SmoothingCondition> {
    let mut out = Vec::new();
    let l = (1.0 / delta).ln();
    if r < 2.0 * eps_max {
        out.push(SmoothingCondition::RadiusCoversOffset);
    }
    if r * r * fisher_r.sqrt() < gamma * eps_max {
        out.push(SmoothingCondition::CurvatureMargin);
    }
    if l / n as f64 > 1.0 / (gamma * gamma) {
        out.push(SmoothingCondition::SampleSize);
    }
    let ll = l.ln();
    let rhs = if ll > 0.0 { l / (gamma * ll) } else { f64::NEG_INFINITY };
    if (1.0 / (r * fisher_r.sqrt())).ln() > rhs {
        out.push(SmoothingCondition::InformationRatio);
    }
    out
}

/// Lattice ratio for the minimal-smoothing search.
pub const SMOOTHING_RATIO: f64 = 1.05;

/// Smallest r = 1.05^k in [2ε_max, 10(IQR + ε_max)] meeting all local-convergence conditions.
pub fn solve_min_smoothing(f: &Distribution, eps_max: f64, delta: f64, n: usize, gamma: f64) -> Result<f64> {
    if !(gamma >= 1.0) {
        return Err(SmleError::InvalidArgument(format!("gamma {gamma} must be ≥ 1")));
    }
    if !(eps_max > 0.0) {
        return Err(SmleError::InvalidArgument(format!("eps_max {eps_max} must be > 0")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(SmleError::InvalidProbability(delta));
    }
    let lo = 2.0 * eps_max;
    let hi = 10.0 * (f.iqr() + eps_max);
    let ln_ratio = SMOOTHING_RATIO.ln();
    let k_lo = (lo.ln() / ln_ratio - 1e-9).ceil() as i64;
    let k_hi = (hi.ln() / ln_ratio + 1e-9).floor() as i64;
    let mut last: Option<(f64, Vec<SmoothingCondition>)> = None;
    for k in k_lo..=k_hi {
        let r = SMOOTHING_RATIO.powi(k as i32);
        let fisher = SmoothedModel::new(f, r)?.fisher_info()?;
        let bad = smoothing_violations(r, fisher, eps_max, delta, n, gamma);
        if bad.is_empty() {
            return Ok(r);
        }
        last = Some((r, bad));
    }
    let (r_max, bad) = last.unwrap_or((hi, vec![SmoothingCondition::RadiusCoversOffset]));
    Err(SmleError::NoFeasibleSmoothing { r_max, failed: bad.iter().map(|c| c.label().to_string()).collect() })
}

/// Baseline estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Baseline {
    Mean,
    Median,
    MedianOfMeans,
    UnsmoothedMle,
}

impl Baseline {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Mean => "mean",
            Self::Median => "median",
            Self::MedianOfMeans => "median_of_means",
            Self::UnsmoothedMle => "unsmoothed_mle",
        }
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median of the means of ⌈8 log(1/δ)⌉ contiguous blocks (at most n).
pub fn median_of_means(xs: &[f64], delta: f64) -> f64 {
    let n = xs.len();
    let k = ((8.0 * (1.0 / delta).ln()).ceil() as usize).clamp(1, n);
    let means: Vec<f64> = (0..k)
        .map(|b| {
            let (s, e) = (b * n / k, (b + 1) * n / k);
            mean(&xs[s..e])
        })
        .collect();
    median(&means)
}

/// λ grid for the full-line likelihood maximization: sample range ± pad, given spacing.
pub fn likelihood_grid(sorted: &[f64], pad: f64, step: f64) -> LambdaGrid {
    LambdaGrid::covering(sorted[0] - pad, sorted[sorted.len() - 1] + pad, step)
}

/// Unsmoothed MLE over a λ grid with spacing min(smallest scale, IQR)/64 spanning the sample range ± 4·IQR.
pub fn unsmoothed_mle(f: &Distribution, samples: &[f64]) -> Result<f64> {
    let model = RawModel::new(f)?;
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let iqr = f.iqr();
    let scale = f.min_scale().min(if iqr > 0.0 { iqr } else { 1.0 });
    let grid = likelihood_grid(&xs, 4.0 * iqr.max(scale), scale / 64.0);
    Ok(grid_argmax(&model, &xs, grid).lambda)
}

/// Full-line smoothed MLE: argmax of Σ log f_r(x'ᵢ − λ) on a grid spanning the
/// sample range ± 4(IQR + r) with spacing min(r, IQR)/64.
pub fn smoothed_grid_mle(m: &SmoothedModel, perturbed: &[f64]) -> f64 {
    let mut xs = perturbed.to_vec();
    xs.sort_by(f64::total_cmp);
    let iqr = m.base().iqr();
    let r = m.r();
    let step = if iqr > 0.0 { r.min(iqr) } else { r } / 64.0;
    let grid = likelihood_grid(&xs, 4.0 * (iqr + r), step);
    grid_argmax(m, &xs, grid).lambda
}

pub fn baseline_estimate(kind: Baseline, f: &Distribution, samples: &[f64], delta: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(SmleError::InvalidArgument("no samples".into()));
    }
    Ok(match kind {
        Baseline::Mean => mean(samples),
        Baseline::Median => median(samples),
        Baseline::MedianOfMeans => median_of_means(samples, delta),
        Baseline::UnsmoothedMle => unsmoothed_mle(f, samples)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, ZeroNoise};

    #[test]
    fn perturb_examples() {
        assert_eq!(perturb_samples(&[1.0, 2.0], 0.5, &mut ZeroNoise).unwrap(), vec![1.0, 2.0]);
        assert!(perturb_samples(&[], 0.5, &mut ZeroNoise).unwrap().is_empty());
        let out = perturb_samples(&vec![0.0; 1_000_000], 0.5, &mut stream(3, "p", &[])).unwrap();
        let m = mean(&out);
        let var = out.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (out.len() - 1) as f64;
        assert!((var - 0.25).abs() < 0.005 * 0.25, "var {var}");
    }

    #[test]
    fn empirical_score_examples() {
        let m = SmoothedModel::new(&Distribution::standard_normal(), 1.0).unwrap();
        assert!(empirical_score(&m, &[-1.0, 3.0], 1.0).abs() < 1e-15);
        assert_eq!(empirical_score(&m, &[0.0], 0.0), 0.0);
        assert_eq!(empirical_score(&m, &[0.0, 0.0], 0.7), 2.0 * m.score(-0.7));
    }

    #[test]
    fn local_mle_examples() {
        let cfg = EstimatorConfig::default();
        let g = Distribution::standard_normal();
        let r = local_mle(&g, 0.5, &[-1.0, 3.0], (-5.0, 5.0), &mut ZeroNoise, &cfg).unwrap();
        assert!((r.lambda_hat - 1.0).abs() <= cfg.root_tol);
        assert!(r.warnings.is_empty());
        let d = Distribution::dirac(0.0).unwrap();
        let r = local_mle(&d, 1.0, &[2.0; 5], (-5.0, 5.0), &mut ZeroNoise, &cfg).unwrap();
        assert!((r.lambda_hat - 2.0).abs() <= cfg.root_tol);
    }

    #[test]
    fn local_mle_without_root_falls_back() {
        let cfg = EstimatorConfig::default();
        let g = Distribution::standard_normal();
        let r = local_mle(&g, 0.5, &[10.0, 11.0], (-1.0, 1.0), &mut ZeroNoise, &cfg).unwrap();
        assert!(!r.root_found());
        assert_eq!(r.lambda_hat, 1.0);
        assert!(matches!(r.strict(), Err(SmleError::NoRootInInterval { .. })));
    }

    #[test]
    fn interval_plan_examples() {
        let g = Distribution::standard_normal();
        let p = IntervalPlan::new(&g, 100, 0.05).unwrap();
        assert_eq!(p.alpha, 0.5);
        let l = Distribution::laplace(1.0).unwrap();
        let p = IntervalPlan::new(&l, 100, 0.05).unwrap();
        let s = (2.0 * 80f64.ln() / 100.0).sqrt();
        assert_eq!(p.alpha, 0.5);
        let expect = -2.0 * (1.0 - 2.0 * s).ln();
        assert!((p.q_hi - p.q_lo - expect).abs() < 1e-12);
        assert!((expect - 1.793_383).abs() < 1e-6);
        assert!(matches!(IntervalPlan::new(&g, 10, 0.05), Err(SmleError::SampleSizeTooSmall { .. })));
    }

    #[test]
    fn rstar_examples() {
        let g = Distribution::standard_normal();
        let cfg = EstimatorConfig::default();
        let r = choose_rstar(&g, 10_000, 0.05, &cfg);
        assert!((r / g.iqr() - 0.3627).abs() < 1e-4);
        let r16 = choose_rstar(&g, 160_000, 0.05, &cfg);
        assert!((r / r16 - 2f64.sqrt()).abs() < 1e-12);
        let wide = Distribution::normal(0.0, 2.0).unwrap();
        assert!((choose_rstar(&wide, 10_000, 0.05, &cfg) / r - 2.0).abs() < 1e-9);
    }

    #[test]
    fn error_bound_examples() {
        let cfg = EstimatorConfig::default();
        let b = error_bound(10_000, (-8f64).exp(), 1.0, &cfg);
        assert!((b.leading - 0.04).abs() < 1e-12);
        let b4 = error_bound(40_000, (-8f64).exp(), 1.0, &cfg);
        assert!((b.leading / b4.leading - 2.0).abs() < 1e-12);
        let big = EstimatorConfig { gamma: 1e12, ..cfg };
        assert!((error_bound(usize::MAX / 2, 0.05, 1.0, &big).refined_factor - 1.0).abs() < 1e-3);
    }

    #[test]
    fn baselines() {
        let g = Distribution::standard_normal();
        assert_eq!(baseline_estimate(Baseline::Mean, &g, &[1.0, 2.0, 3.0], 0.05).unwrap(), 2.0);
        assert_eq!(baseline_estimate(Baseline::Median, &g, &[5.0], 0.05).unwrap(), 5.0);
        let u = baseline_estimate(Baseline::UnsmoothedMle, &g, &[-1.0, 3.0], 0.05).unwrap();
        assert!((u - 1.0).abs() < 1.0 / 64.0);
        let d = Distribution::dirac(0.0).unwrap();
        assert_eq!(
            baseline_estimate(Baseline::UnsmoothedMle, &d, &[0.0], 0.05).unwrap_err(),
            SmleError::AtomDensityUndefined(0.0)
        );
    }

    #[test]
    fn min_smoothing_infeasible_sample_size() {
        let g = Distribution::standard_normal();
        let e = solve_min_smoothing(&g, 0.01, 0.05, 2, 5.0).unwrap_err();
        assert!(matches!(e, SmleError::NoFeasibleSmoothing { .. }));
    }

    #[test]
    fn min_smoothing_is_minimal() {
        let g = Distribution::standard_normal();
        let (eps, delta, n, gamma) = (0.01, (-10f64).exp(), 100_000, 5.0);
        let r = solve_min_smoothing(&g, eps, delta, n, gamma).unwrap();
        let i = |r: f64| 1.0 / (1.0 + r * r);
        assert!(smoothing_violations(r, i(r), eps, delta, n, gamma).is_empty());
        let below = r / SMOOTHING_RATIO;
        if below >= 2.0 * eps {
            assert!(!smoothing_violations(below, i(below), eps, delta, n, gamma).is_empty());
        }
        let r2 = solve_min_smoothing(&g, 2.0 * eps, delta, n, gamma).unwrap();
        assert!(r2 >= r);
    }
}
