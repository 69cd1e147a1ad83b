//! Monte Carlo harness: MSE over an (n, r) grid, paired error distributions
//! across estimators, and coverage of the predicted error bound.
//!
//! Every trial draws its base samples and its Gaussian perturbation noise from
//! streams keyed by (seed, n, trial). The perturbation for radius r is then
//! x' = x + r·z, so all radii and all estimators in a trial share the same
//! draws. Work is split across rayon workers and gathered by index; all sums
//! run sequentially afterwards, so results do not depend on the worker count.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::distributions::Distribution;
use crate::error::{Result, SmleError};
use crate::estimators::{baseline_estimate, smoothed_grid_mle, Baseline, EstimatorConfig, GlobalMle};
use crate::rng::{stream, NoiseSource, ReplayNoise};
use crate::smoothing::SmoothedModel;

/// Estimators available to the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// Full-line λ-grid maximizer of Σ log f_r(x'ᵢ − λ).
    SmoothedMle,
    /// Two-stage estimator: quantile interval, r*, local root.
    GlobalMle,
    UnsmoothedMle,
    Mean,
    Median,
    MedianOfMeans,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 6] =
        [Self::SmoothedMle, Self::GlobalMle, Self::UnsmoothedMle, Self::Mean, Self::Median, Self::MedianOfMeans];

    pub fn name(&self) -> &'static str {
        match self {
            Self::SmoothedMle => "smoothed_mle",
            Self::GlobalMle => "global_mle",
            Self::UnsmoothedMle => "unsmoothed_mle",
            Self::Mean => "mean",
            Self::Median => "median",
            Self::MedianOfMeans => "median_of_means",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub dist: Distribution,
    pub lambda_true: f64,
    pub n_grid: Vec<usize>,
    pub r_grid: Vec<f64>,
    pub delta: f64,
    pub trials: usize,
    pub estimators: Vec<EstimatorKind>,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn new(dist: Distribution) -> Self {
        Self {
            dist,
            lambda_true: 0.0,
            n_grid: vec![200, 1000, 5000],
            r_grid: log_spaced(0.001, 1.0, 8),
            delta: 0.05,
            trials: 400,
            estimators: vec![EstimatorKind::SmoothedMle, EstimatorKind::UnsmoothedMle, EstimatorKind::Mean],
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(SmleError::InvalidArgument("trials must be ≥ 1".into()));
        }
        if self.n_grid.is_empty() || self.r_grid.is_empty() {
            return Err(SmleError::InvalidArgument("n and r grids must be nonempty".into()));
        }
        if self.n_grid.contains(&0) {
            return Err(SmleError::InvalidArgument("sample sizes must be ≥ 1".into()));
        }
        if let Some(&r) = self.r_grid.iter().find(|&&r| !(r > 0.0 && r.is_finite())) {
            return Err(SmleError::InvalidRadius(r));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(SmleError::InvalidProbability(self.delta));
        }
        if !self.lambda_true.is_finite() {
            return Err(SmleError::InvalidArgument("lambda_true must be finite".into()));
        }
        Ok(())
    }
}

/// `count` points from lo to hi, equally spaced in log scale.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| match i {
            0 => lo,
            _ if i + 1 == count => hi,
            _ => (a + (b - a) * i as f64 / (count - 1) as f64).exp(),
        })
        .collect()
}

/// Base samples (shifted by λ) and standard normal draws for one trial.
pub fn trial_draws(dist: &Distribution, lambda: f64, n: usize, seed: u64, trial: usize) -> (Vec<f64>, Vec<f64>) {
    let idx = [n as u64, trial as u64];
    let xs = dist.sample(n, &mut stream(seed, "samples", &idx)).into_iter().map(|x| x + lambda).collect();
    let mut noise = stream(seed, "noise", &idx);
    let zs = (0..n).map(|_| noise.standard_normal()).collect();
    (xs, zs)
}

fn perturb(xs: &[f64], zs: &[f64], r: f64) -> Vec<f64> {
    xs.iter().zip(zs).map(|(x, z)| x + r * z).collect()
}

/// Summary of one (n, r) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult {
    pub n: usize,
    pub r: f64,
    pub mse: f64,
    pub mean_abs_err: f64,
    /// (probability, quantile of |λ̂ − λ|)
    pub quantile_err: Vec<(f64, f64)>,
    pub trials: usize,
    pub failures: usize,
}

impl CellResult {
    pub fn quantile(&self, p: f64) -> Option<f64> {
        self.quantile_err.iter().find(|(q, _)| *q == p).map(|&(_, v)| v)
    }
}

const CELL_QUANTILES: [f64; 2] = [0.9, 0.95];

/// Order statistic at ⌈p·len⌉ of an ascending slice.
fn upper_quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let k = ((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1;
    sorted[k]
}

fn summarize(n: usize, r: f64, errors: &[Option<f64>]) -> CellResult {
    let ok: Vec<f64> = errors.iter().flatten().copied().collect();
    let failures = errors.len() - ok.len();
    let m = ok.len() as f64;
    let mse = ok.iter().map(|e| e * e).sum::<f64>() / m;
    let mean_abs_err = ok.iter().map(|e| e.abs()).sum::<f64>() / m;
    let mut abs: Vec<f64> = ok.iter().map(|e| e.abs()).collect();
    abs.sort_by(f64::total_cmp);
    let quantile_err = CELL_QUANTILES.iter().map(|&p| (p, upper_quantile(&abs, p))).collect();
    CellResult { n, r, mse, mean_abs_err, quantile_err, trials: errors.len(), failures }
}

/// MSE of the full-line smoothed MLE for every (n, r) cell, in n-major order.
pub fn run_mse_heatmap(cfg: &ExperimentConfig) -> Result<Vec<CellResult>> {
    cfg.validate()?;
    let mut out = Vec::with_capacity(cfg.n_grid.len() * cfg.r_grid.len());
    for &n in &cfg.n_grid {
        let draws: Vec<(Vec<f64>, Vec<f64>)> =
            (0..cfg.trials).into_par_iter().map(|t| trial_draws(&cfg.dist, cfg.lambda_true, n, cfg.seed, t)).collect();
        for &r in &cfg.r_grid {
            let errors: Vec<Option<f64>> = match SmoothedModel::new(&cfg.dist, r) {
                Ok(model) => draws
                    .par_iter()
                    .map(|(xs, zs)| {
                        let lam = smoothed_grid_mle(&model, &perturb(xs, zs, r));
                        lam.is_finite().then_some(lam - cfg.lambda_true)
                    })
                    .collect(),
                Err(_) => vec![None; cfg.trials],
            };
            out.push(summarize(n, r, &errors));
        }
    }
    Ok(out)
}

/// Index into `r_grid` of the smallest MSE for each n (ties to the smaller r).
pub fn best_r_indices(cells: &[CellResult], n_grid: &[usize]) -> Vec<usize> {
    n_grid
        .iter()
        .map(|&n| {
            let row: Vec<&CellResult> = cells.iter().filter(|c| c.n == n).collect();
            let mut best = 0;
            for (i, c) in row.iter().enumerate() {
                if c.mse < row[best].mse {
                    best = i;
                }
            }
            best
        })
        .collect()
}

/// Errors λ̂ − λ of one estimator; `None` marks a failed trial.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSeries {
    pub estimator: EstimatorKind,
    pub errors: Vec<Option<f64>>,
}

impl ErrorSeries {
    pub fn failures(&self) -> usize {
        self.errors.iter().filter(|e| e.is_none()).count()
    }

    pub fn mse(&self) -> f64 {
        let ok: Vec<f64> = self.errors.iter().flatten().copied().collect();
        ok.iter().map(|e| e * e).sum::<f64>() / ok.len() as f64
    }
}

struct Prepared {
    model: Option<SmoothedModel>,
    global: Option<GlobalMle>,
}

fn estimate_one(
    kind: EstimatorKind,
    cfg: &ExperimentConfig,
    prep: &Prepared,
    xs: &[f64],
    zs: &[f64],
    r: f64,
) -> Option<f64> {
    let lam = match kind {
        EstimatorKind::SmoothedMle => Some(smoothed_grid_mle(prep.model.as_ref()?, &perturb(xs, zs, r))),
        EstimatorKind::GlobalMle => {
            let g = prep.global.as_ref()?;
            g.estimate(xs, &mut ReplayNoise::new(zs)).ok().map(|e| e.lambda_hat)
        }
        EstimatorKind::UnsmoothedMle => baseline_estimate(Baseline::UnsmoothedMle, &cfg.dist, xs, cfg.delta).ok(),
        EstimatorKind::Mean => baseline_estimate(Baseline::Mean, &cfg.dist, xs, cfg.delta).ok(),
        EstimatorKind::Median => baseline_estimate(Baseline::Median, &cfg.dist, xs, cfg.delta).ok(),
        EstimatorKind::MedianOfMeans => baseline_estimate(Baseline::MedianOfMeans, &cfg.dist, xs, cfg.delta).ok(),
    }?;
    lam.is_finite().then_some(lam - cfg.lambda_true)
}

/// Paired errors of every configured estimator at n = n_grid[0], r = r_grid[0].
pub fn run_error_distribution(cfg: &ExperimentConfig) -> Result<Vec<ErrorSeries>> {
    cfg.validate()?;
    if cfg.estimators.is_empty() {
        return Err(SmleError::InvalidArgument("no estimators selected".into()));
    }
    let n = cfg.n_grid[0];
    let r = cfg.r_grid[0];
    let prep = Prepared {
        model: SmoothedModel::new(&cfg.dist, r).ok(),
        global: cfg
            .estimators
            .contains(&EstimatorKind::GlobalMle)
            .then(|| GlobalMle::new(&cfg.dist, n, &EstimatorConfig { delta: cfg.delta, ..Default::default() }).ok())
            .flatten(),
    };
    let per_trial: Vec<Vec<Option<f64>>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let (xs, zs) = trial_draws(&cfg.dist, cfg.lambda_true, n, cfg.seed, t);
            cfg.estimators.iter().map(|&k| estimate_one(k, cfg, &prep, &xs, &zs, r)).collect()
        })
        .collect();
    Ok(cfg
        .estimators
        .iter()
        .enumerate()
        .map(|(j, &estimator)| ErrorSeries { estimator, errors: per_trial.iter().map(|row| row[j]).collect() })
        .collect())
}

pub const COVERAGE_FACTORS: [f64; 4] = [1.0, 1.1, 1.2, 1.5];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoverageRow {
    pub factor: f64,
    pub coverage: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub n: usize,
    pub delta: f64,
    pub r_used: f64,
    pub predicted_bound: f64,
    pub rows: Vec<CoverageRow>,
    pub failures: usize,
}

/// Fraction of trials with |λ̂ − λ| ≤ factor·predicted_bound for the two-stage
/// estimator at n = n_grid[0]. Failed trials count as not covered.
pub fn run_coverage(cfg: &ExperimentConfig, est: &EstimatorConfig) -> Result<CoverageReport> {
    cfg.validate()?;
    let n = cfg.n_grid[0];
    let ecfg = EstimatorConfig { delta: cfg.delta, ..*est };
    let g = GlobalMle::new(&cfg.dist, n, &ecfg)?;
    let bound = crate::estimators::error_bound(n, cfg.delta, g.model().fisher_info()?, &ecfg).leading;
    let errors: Vec<Option<f64>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let (xs, zs) = trial_draws(&cfg.dist, cfg.lambda_true, n, cfg.seed, t);
            g.estimate(&xs, &mut ReplayNoise::new(&zs))
                .ok()
                .map(|e| e.lambda_hat - cfg.lambda_true)
                .filter(|e| e.is_finite())
        })
        .collect();
    let failures = errors.iter().filter(|e| e.is_none()).count();
    let rows = COVERAGE_FACTORS
        .iter()
        .map(|&factor| {
            let hit = errors.iter().flatten().filter(|e| e.abs() <= factor * bound).count();
            CoverageRow { factor, coverage: hit as f64 / cfg.trials as f64, trials: cfg.trials }
        })
        .collect();
    Ok(CoverageReport { n, delta: cfg.delta, r_used: g.model().r(), predicted_bound: bound, rows, failures })
}

/// Float formatting used in every CSV: 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub const HEATMAP_HEADER: &str = "n,r,mse,mean_abs_err,q90,q95,trials,failures";
pub const ERRORS_HEADER: &str = "estimator,trial,error";
pub const COVERAGE_HEADER: &str = "factor,coverage,trials";

pub fn heatmap_csv(cells: &[CellResult]) -> String {
    let mut s = String::from(HEATMAP_HEADER);
    s.push('\n');
    for c in cells {
        let q = |p| c.quantile(p).unwrap_or(f64::NAN);
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            c.n,
            fmt_f64(c.r),
            fmt_f64(c.mse),
            fmt_f64(c.mean_abs_err),
            fmt_f64(q(0.9)),
            fmt_f64(q(0.95)),
            c.trials,
            c.failures
        );
    }
    s
}

pub fn errors_csv(series: &[ErrorSeries]) -> String {
    let mut s = String::from(ERRORS_HEADER);
    s.push('\n');
    for e in series {
        for (t, v) in e.errors.iter().enumerate() {
            let _ = writeln!(s, "{},{},{}", e.estimator.name(), t, fmt_f64(v.unwrap_or(f64::NAN)));
        }
    }
    s
}

pub fn coverage_csv(rep: &CoverageReport) -> String {
    let mut s = String::from(COVERAGE_HEADER);
    s.push('\n');
    for row in &rep.rows {
        let _ = writeln!(s, "{},{},{}", fmt_f64(row.factor), fmt_f64(row.coverage), row.trials);
    }
    s
}

pub fn write_csv(path: &Path, contents: &str) -> io::Result<()> {
    std::fs::write(path, contents)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_grid_endpoints() {
        let g = log_spaced(0.001, 1.0, 8);
        assert_eq!(g.len(), 8);
        assert_eq!(g[0], 0.001);
        assert_eq!(g[7], 1.0);
        assert!(g.windows(2).all(|w| (w[1] / w[0] - 10f64.powf(3.0 / 7.0)).abs() < 1e-12));
    }

    #[test]
    fn gaussian_heatmap_matches_variance() {
        let mut cfg = ExperimentConfig::new(Distribution::standard_normal());
        cfg.n_grid = vec![100];
        cfg.r_grid = vec![0.5];
        cfg.trials = 2000;
        cfg.lambda_true = 0.3;
        let cells = run_mse_heatmap(&cfg).unwrap();
        let expect = 1.25 / 100.0;
        assert!((cells[0].mse / expect - 1.0).abs() < 0.2, "{}", cells[0].mse);
        assert!(cells[0].quantile(0.9).unwrap() <= cells[0].quantile(0.95).unwrap());
    }

    #[test]
    fn deterministic_csv() {
        let mut cfg = ExperimentConfig::new(Distribution::laplace(1.0).unwrap());
        cfg.n_grid = vec![50];
        cfg.r_grid = vec![0.1, 0.3];
        cfg.trials = 1;
        cfg.seed = 5;
        let a = heatmap_csv(&run_mse_heatmap(&cfg).unwrap());
        let b = heatmap_csv(&run_mse_heatmap(&cfg).unwrap());
        assert_eq!(a, b);
        assert!(a.starts_with("n,r,mse,mean_abs_err,q90,q95,trials,failures\n"));
    }

    #[test]
    fn gaussian_mean_equals_unsmoothed_mle() {
        let mut cfg = ExperimentConfig::new(Distribution::standard_normal());
        cfg.n_grid = vec![40];
        cfg.r_grid = vec![0.2];
        cfg.trials = 20;
        cfg.estimators = vec![EstimatorKind::Mean, EstimatorKind::UnsmoothedMle];
        let s = run_error_distribution(&cfg).unwrap();
        // grid spacing is min(1, IQR)/64
        for (a, b) in s[0].errors.iter().zip(&s[1].errors) {
            assert!((a.unwrap() - b.unwrap()).abs() <= 0.5 / 64.0 + 1e-12);
        }
    }

    #[test]
    fn coverage_nesting() {
        let mut cfg = ExperimentConfig::new(Distribution::standard_normal());
        cfg.n_grid = vec![200];
        cfg.trials = 200;
        cfg.delta = 0.5;
        let rep = run_coverage(&cfg, &EstimatorConfig::default()).unwrap();
        assert!(rep.rows[2].coverage >= 0.5);
        assert!(rep.rows.windows(2).all(|w| w[0].coverage <= w[1].coverage));
    }
}
