//! Property suite over every fixture: distribution bookkeeping, smoothed
//! score bounds, estimator behaviour, lower-bound consistency and experiment
//! reproducibility. Each check reports a verdict and the measured numbers.

use rayon::prelude::*;
use serde::Serialize;

use crate::distributions::Distribution;
use crate::error::Result;
use crate::estimators::{
    empirical_score, local_mle, local_mle_perturbed, perturb_samples, solve_min_smoothing, EstimatorConfig, GlobalMle,
};
use crate::experiments::{
    best_r_indices, heatmap_csv, log_spaced, run_error_distribution, run_mse_heatmap, trial_draws, EstimatorKind,
    ExperimentConfig,
};
use crate::fixtures::FixtureSpec;
use crate::lowerbound::{
    delta_floor, gaussian_tv_complement, hellinger_sq, kl_divergence, kl_divergence_reverse, tv_product_mc,
};
use crate::quadrature::{integrate, Tolerance};
use crate::rng::{stream, ReplayNoise};
use crate::smoothing::SmoothedModel;

/// Radii used by the per-fixture smoothing checks.
pub const RADII: [f64; 5] = [0.01, 0.05, 0.1, 0.5, 1.0];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub module: &'static str,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantOptions {
    /// Monte Carlo trials for the estimator, coverage and TV checks.
    pub trials: usize,
    /// Trials per heat-map cell.
    pub heatmap_trials: usize,
    pub seed: u64,
}

impl Default for InvariantOptions {
    fn default() -> Self {
        Self { trials: 2000, heatmap_trials: 200, seed: 0 }
    }
}

fn check(module: &'static str, name: impl Into<String>, passed: bool, detail: String) -> CheckResult {
    CheckResult { module, name: name.into(), passed, detail }
}

fn fixtures() -> Vec<(FixtureSpec, Distribution)> {
    FixtureSpec::all().into_iter().map(|f| (f.clone(), f.build().expect("default fixtures are valid"))).collect()
}

/// Runs every check in a fixed order.
pub fn run_all(opts: &InvariantOptions) -> Result<Vec<CheckResult>> {
    let mut out = distribution_checks(opts)?;
    out.extend(smoothing_checks()?);
    out.extend(estimator_checks(opts)?);
    out.extend(lowerbound_checks(opts)?);
    out.extend(experiment_checks(opts)?);
    Ok(out)
}

pub fn distribution_checks(opts: &InvariantOptions) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    for (spec, d) in fixtures() {
        let name = spec.name();
        let (lo, hi) = d.effective_support();
        let mass = match &d {
            _ if d.has_atom() => d.cdf(hi) - d.cdf(lo - 1e-12),
            Distribution::Grid(g) => {
                let v = g.density();
                g.dx() * (v.iter().sum::<f64>() - 0.5 * (v[0] + v[v.len() - 1]))
            }
            Distribution::Mixture(m) => {
                let mut pts: Vec<f64> = m
                    .components()
                    .iter()
                    .flat_map(|c| {
                        [0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0]
                            .into_iter()
                            .flat_map(move |k| [c.center() - k * c.scale(), c.center() + k * c.scale()])
                    })
                    .chain([lo, hi])
                    .filter(|x| (lo..=hi).contains(x))
                    .collect();
                pts.sort_by(f64::total_cmp);
                pts.dedup();
                integrate(|x| d.pdf(x).unwrap_or(0.0), &pts, Tolerance::default())?.value
            }
        };
        out.push(check(
            "distributions",
            format!("unit mass [{name}]"),
            (mass - 1.0).abs() <= 1e-6,
            format!("mass={mass:.12}"),
        ));

        let q25 = d.quantile(0.25)?;
        let q75 = d.quantile(0.75)?;
        out.push(check(
            "distributions",
            format!("iqr = q75 - q25 [{name}]"),
            d.iqr() == q75 - q25,
            format!("iqr={:.12}", d.iqr()),
        ));

        if d.has_atom() {
            continue;
        }
        let mut worst = 0.0f64;
        for i in 1..=99 {
            let p = i as f64 / 100.0;
            worst = worst.max((d.cdf(d.quantile(p)?) - p).abs());
        }
        out.push(check(
            "distributions",
            format!("quantile/cdf round trip [{name}]"),
            worst <= 1e-6,
            format!("max_err={worst:.3e}"),
        ));

        let mut xs = d.sample(1_000_000, &mut stream(opts.seed, "invariant_sampling", &[]));
        xs.sort_by(f64::total_cmp);
        let mut worst = 0.0f64;
        for i in 1..=9 {
            let x = d.quantile(i as f64 / 10.0)?;
            let emp = xs.partition_point(|&v| v <= x) as f64 / xs.len() as f64;
            worst = worst.max((emp - d.cdf(x)).abs());
        }
        out.push(check(
            "distributions",
            format!("sampling matches cdf at deciles [{name}]"),
            worst <= 0.005,
            format!("max_err={worst:.3e}"),
        ));
    }
    Ok(out)
}

/// Smoothing bounds for one fixture and radius.
fn smoothing_cell(name: &str, d: &Distribution, r: f64) -> Result<Vec<CheckResult>> {
    let m = SmoothedModel::new(d, r)?;
    let i = m.fisher_info()?;
    let iqr = d.iqr();
    let tag = format!("[{name}, r={r}]");
    let mut out = vec![
        check(
            "smoothing",
            format!("I_r <= 1/r^2 {tag}"),
            i <= (1.0 + 1e-9) / (r * r),
            format!("I_r*r^2={:.9}", i * r * r),
        ),
        check(
            "smoothing",
            format!("I_r >= 0.01/(iqr+r)^2 {tag}"),
            i >= 0.01 / ((iqr + r) * (iqr + r)),
            format!("I_r*(iqr+r)^2={:.6}", i * (iqr + r) * (iqr + r)),
        ),
    ];

    let pts = m.scan_points(1000);
    let min_ds = pts.iter().map(|&x| m.score_deriv(x)).fold(f64::INFINITY, f64::min);
    out.push(check(
        "smoothing",
        format!("s_r' >= -1/r^2 {tag}"),
        min_ds >= -(1.0 + 1e-3) / (r * r),
        format!("min s'*r^2={:.6}", min_ds * r * r),
    ));

    let h = r * 1e-4;
    let mut worst = 0.0f64;
    for &x in &pts {
        let fd = (m.log_pdf(x + h) - m.log_pdf(x - h)) / (2.0 * h);
        let s = m.score(x);
        worst = worst.max((fd - s).abs() / s.abs().max(1.0 / r));
    }
    out.push(check(
        "smoothing",
        format!("score matches difference of log pdf {tag}"),
        worst <= 1e-5,
        format!("max_rel_err={worst:.3e}"),
    ));

    let log_term = (1.0 / (r * r * i)).ln().max(1.0).sqrt();
    let mut lin_worst = 0.0f64;
    let mut second_worst = 0.0f64;
    for div in [64.0, 32.0, 16.0, 8.0] {
        let eps = r / div;
        let m1 = m.score_moment(eps, 1, false)?;
        lin_worst = lin_worst.max((m1 + i * eps).abs() / (10.0 * i.sqrt() * eps * eps / (r * r)));
        let m2 = m.score_moment(eps, 2, false)?;
        second_worst = second_worst.max(m2 / (i * (1.0 + 10.0 * (eps / r) * log_term)));
    }
    out.push(check(
        "smoothing",
        format!("expected score linear in offset (K=10) {tag}"),
        lin_worst <= 1.0,
        format!("max_ratio={lin_worst:.4}"),
    ));
    out.push(check(
        "smoothing",
        format!("second moment stable under offset (K'=10) {tag}"),
        second_worst <= 1.0,
        format!("max_ratio={second_worst:.4}"),
    ));

    let mut sub_gamma = 0.0f64;
    let mut centered = 0.0f64;
    for div in [f64::INFINITY, 8.0, 4.0, 2.0] {
        let eps = r / div;
        let m2 = m.score_moment(eps, 2, false)?;
        for k in [3u32, 4] {
            let mk = m.score_moment(eps, k, true)?;
            let fact = if k == 3 { 6.0 } else { 24.0 };
            let bound = fact / 2.0 * (15.0 / r).powi(k as i32 - 2) * m2.max(i);
            sub_gamma = sub_gamma.max(mk / bound);
            if eps == 0.0 {
                let bound = (1.6 / r).powi(k as i32 - 2) * (k as f64).powf(k as f64 / 2.0) * i;
                centered = centered.max(mk / bound);
            }
        }
    }
    out.push(check(
        "smoothing",
        format!("offset score moments sub-Gamma (k=3,4) {tag}"),
        sub_gamma <= 1.0,
        format!("max_ratio={sub_gamma:.4}"),
    ));
    out.push(check(
        "smoothing",
        format!("centered score moments (k=3,4) {tag}"),
        centered <= 1.0,
        format!("max_ratio={centered:.4}"),
    ));
    Ok(out)
}

pub fn smoothing_checks() -> Result<Vec<CheckResult>> {
    let cells: Vec<(String, Distribution, f64)> = fixtures()
        .into_iter()
        .flat_map(|(s, d)| RADII.iter().map(move |&r| (s.name().to_string(), d.clone(), r)))
        .collect();
    let parts: Vec<Result<Vec<CheckResult>>> =
        cells.par_iter().map(|(name, d, r)| smoothing_cell(name, d, *r)).collect();
    let mut out = Vec::new();
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

fn continuous_fixtures() -> Vec<(FixtureSpec, Distribution)> {
    fixtures().into_iter().filter(|(_, d)| !d.has_atom()).collect()
}

pub fn estimator_checks(opts: &InvariantOptions) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    let cfg = EstimatorConfig::default();

    // shift equivariance and root validity
    for (spec, d) in continuous_fixtures() {
        let name = spec.name();
        let r = 0.3;
        let xs = d.sample(200, &mut stream(opts.seed, "equivariance", &[]));
        let zs: Vec<f64> = {
            let mut rng = stream(opts.seed, "equivariance_noise", &[]);
            (0..xs.len()).map(|_| crate::rng::NoiseSource::standard_normal(&mut rng)).collect()
        };
        let base = local_mle(&d, r, &xs, (-1.0, 1.0), &mut ReplayNoise::new(&zs), &cfg)?;
        let mut worst = 0.0f64;
        for c in [-3.7, 0.25, 12.5] {
            let shifted: Vec<f64> = xs.iter().map(|x| x + c).collect();
            let res = local_mle(&d, r, &shifted, (-1.0 + c, 1.0 + c), &mut ReplayNoise::new(&zs), &cfg)?;
            worst = worst.max((res.lambda_hat - base.lambda_hat - c).abs());
        }
        out.push(check(
            "estimators",
            format!("shift equivariance within root_tol [{name}]"),
            worst <= cfg.root_tol,
            format!("max_dev={worst:.3e}"),
        ));

        let m = SmoothedModel::new(&d, r)?;
        let perturbed = perturb_samples(&xs, r, &mut ReplayNoise::new(&zs))?;
        let res = local_mle_perturbed(&m, &perturbed, (-1.0, 1.0), &cfg)?;
        let ok = if res.warnings.is_empty() {
            let lo = empirical_score(&m, &perturbed, res.lambda_hat - cfg.root_tol);
            let hi = empirical_score(&m, &perturbed, res.lambda_hat + cfg.root_tol);
            lo <= 0.0 && hi >= 0.0
        } else {
            true
        };
        out.push(check(
            "estimators",
            format!("root bracketed within root_tol [{name}]"),
            ok,
            format!("lambda_hat={:.12} warnings={}", res.lambda_hat, res.warnings.len()),
        ));
    }

    out.push(score_sign_check(opts)?);

    // coverage of the two-stage estimator across continuous fixtures
    let (n, delta) = (1000usize, 0.05);
    for (spec, d) in continuous_fixtures() {
        let ecfg = EstimatorConfig { delta, ..cfg };
        let g = GlobalMle::new(&d, n, &ecfg)?;
        let misses: Vec<bool> = (0..opts.trials)
            .into_par_iter()
            .map(|t| {
                let (xs, zs) = trial_draws(&d, 0.0, n, opts.seed, t);
                match g.estimate(&xs, &mut ReplayNoise::new(&zs)) {
                    Ok(e) => e.lambda_hat.abs() > 1.2 * e.predicted_bound,
                    Err(_) => true,
                }
            })
            .collect();
        let frac = misses.iter().filter(|&&m| m).count() as f64 / opts.trials as f64;
        out.push(check(
            "estimators",
            format!("global MLE misses 1.2x bound in <= 2 delta of trials [{}]", spec.name()),
            frac <= 2.0 * delta,
            format!("miss_fraction={frac:.4} trials={}", opts.trials),
        ));
    }
    Ok(out)
}

/// Setting of the sign-property check: Gaussian base, n, δ, ε_max, γ.
pub const SIGN_CHECK: (usize, f64, f64, f64) = (2000, 0.01, 0.2, 2.0);

/// Fraction of trials where ŝ(λ−ε) < 0 < ŝ(λ+ε) for every ε on a grid in
/// (1.3·√(2 log(1/δ)/(n I_r)), ε_max].
pub fn score_sign_fraction(trials: usize, seed: u64) -> Result<(f64, f64)> {
    let (n, delta, eps_max, gamma) = SIGN_CHECK;
    let d = Distribution::standard_normal();
    let r = solve_min_smoothing(&d, eps_max, delta, n, gamma)?;
    let m = SmoothedModel::new(&d, r)?;
    let i = m.fisher_info()?;
    let lo = 1.3 * (2.0 * (1.0 / delta).ln() / (n as f64 * i)).sqrt();
    let grid: Vec<f64> = (1..=16).map(|j| lo + (eps_max - lo) * j as f64 / 16.0).collect();
    let hits: Vec<bool> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let (xs, zs) = trial_draws(&d, 0.0, n, seed, t);
            let p: Vec<f64> = xs.iter().zip(&zs).map(|(x, z)| x + r * z).collect();
            grid.iter().all(|&e| empirical_score(&m, &p, -e) < 0.0 && empirical_score(&m, &p, e) > 0.0)
        })
        .collect();
    Ok((hits.iter().filter(|&&h| h).count() as f64 / trials as f64, r))
}

fn score_sign_check(opts: &InvariantOptions) -> Result<CheckResult> {
    let (frac, r) = score_sign_fraction(opts.trials, opts.seed)?;
    Ok(check(
        "estimators",
        "score sign property on the local interval [gaussian]",
        frac >= 0.98,
        format!("fraction={frac:.4} r={r:.6} trials={}", opts.trials),
    ))
}

/// Pure Gaussian N(0, σ²) as a smoothed point mass.
fn pure_gaussian(sigma: f64) -> SmoothedModel {
    SmoothedModel::new(&Distribution::dirac(0.0).expect("valid atom"), sigma).expect("sigma > 0")
}

pub fn lowerbound_checks(opts: &InvariantOptions) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    for (spec, d) in fixtures() {
        let name = spec.name();
        let symmetric = matches!(spec, FixtureSpec::Gaussian | FixtureSpec::Laplace | FixtureSpec::DiracMixture { .. });
        let mut sym_worst = 0.0f64;
        let mut order_worst = 0.0f64;
        let mut law_worst = 0.0f64;
        for &r in &RADII {
            let m = SmoothedModel::new(&d, r)?;
            for shift in [r / 16.0, r / 4.0] {
                let kl = kl_divergence(&m, shift)?;
                let klr = kl_divergence_reverse(&m, shift)?;
                let h2 = hellinger_sq(&m, shift)?;
                order_worst = order_worst.max(h2 / (0.5 * kl.min(klr)));
                if symmetric {
                    sym_worst = sym_worst.max((kl - klr).abs() / kl);
                    let h2n = hellinger_sq(&m, -shift)?;
                    sym_worst = sym_worst.max((h2 - h2n).abs() / h2);
                }
            }
            let eps = r / 64.0;
            let i = m.fisher_info()?;
            let kl = kl_divergence(&m, 2.0 * eps)?;
            law_worst = law_worst.max((kl / (eps * eps) / (2.0 * i) - 1.0).abs());
        }
        if symmetric {
            out.push(check(
                "lowerbound",
                format!("KL and H^2 symmetric in shift [{name}]"),
                sym_worst <= 1e-8,
                format!("max_rel_diff={sym_worst:.3e}"),
            ));
        }
        out.push(check(
            "lowerbound",
            format!("H^2 <= min(KL)/2 [{name}]"),
            order_worst <= 1.0,
            format!("max_ratio={order_worst:.4}"),
        ));
        out.push(check(
            "lowerbound",
            format!("KL(2 eps)/eps^2 within 5% of 2 I_r at eps=r/64 [{name}]"),
            law_worst <= 0.05,
            format!("max_rel_err={law_worst:.3e}"),
        ));
    }

    let (all_ok, detail) = tv_oracle_grid(opts.trials.max(1000), opts.seed)?;
    out.push(check("lowerbound", "TV Monte Carlo within 4 stderr of Gaussian closed form", all_ok, detail));

    let (ok, detail) = delta_floor_grid();
    out.push(check("lowerbound", "Gaussian 1-TV >= delta_floor (C=1)", ok, detail));
    Ok(out)
}

/// Compares tv_product_mc with 2Q(shift·√n/(2σ)) for σ ∈ {0.5, 1, 2}, n ∈ {10, 100}, shift ∈ {0.05, 0.2}.
pub fn tv_oracle_grid(trials: usize, seed: u64) -> Result<(bool, String)> {
    let mut ok = true;
    let mut worst = 0.0f64;
    for sigma in [0.5, 1.0, 2.0] {
        let m = pure_gaussian(sigma);
        for n in [10usize, 100] {
            for shift in [0.05, 0.2] {
                let est = tv_product_mc(&m, shift, n, trials, seed)?;
                let exact = gaussian_tv_complement(shift, sigma, n);
                let z = (est.complement - exact).abs() / est.stderr;
                worst = worst.max(z);
                ok &= z <= 4.0;
            }
        }
    }
    Ok((ok, format!("max_z={worst:.3} trials={trials}")))
}

/// 1−TV at shift 2ε with ε = √(2 log(1/δ)/(n I)) against delta_floor with κ = ε/(r³ I_r), for a unit Gaussian.
pub fn delta_floor_grid() -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for l in [3.0f64, 6.0] {
        for n in [100usize, 1000] {
            let i = 1.0;
            let eps = (2.0 * l / (n as f64 * i)).sqrt();
            let kl = 2.0 * eps * eps * i;
            let tv_c = gaussian_tv_complement(2.0 * eps, 1.0, n);
            let floor = delta_floor(n, kl, eps, 1.0);
            ok &= tv_c >= floor;
            parts.push(format!("L={l},n={n}:1-TV={tv_c:.4e},floor={floor:.4e}"));
        }
    }
    (ok, parts.join(" "))
}

pub fn experiment_checks(opts: &InvariantOptions) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();

    let mut cfg = ExperimentConfig::new(Distribution::laplace(1.0)?);
    cfg.n_grid = vec![60];
    cfg.r_grid = vec![0.2];
    cfg.trials = 16;
    cfg.seed = opts.seed;
    cfg.estimators = vec![EstimatorKind::Mean, EstimatorKind::SmoothedMle, EstimatorKind::Median];
    let series = run_error_distribution(&cfg)?;
    let mut paired = true;
    for t in 0..cfg.trials {
        let (xs, _) = trial_draws(&cfg.dist, 0.0, 60, cfg.seed, t);
        paired &= series[0].errors[t] == Some(xs.iter().sum::<f64>() / xs.len() as f64);
    }
    out.push(check("experiments", "estimators share each trial's samples", paired, format!("trials={}", cfg.trials)));

    let mut small = ExperimentConfig::new(crate::fixtures::make_fixture(&FixtureSpec::spiked_laplace())?);
    small.n_grid = vec![100, 300];
    small.r_grid = vec![0.01, 0.1, 0.5];
    small.trials = 6;
    small.seed = opts.seed;
    let mut outputs = Vec::new();
    for threads in [1usize, 8, 1] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool");
        outputs.push(pool.install(|| run_mse_heatmap(&small).map(|c| heatmap_csv(&c)))?);
    }
    out.push(check(
        "experiments",
        "heat-map CSV identical across runs and worker counts",
        outputs.windows(2).all(|w| w[0] == w[1]),
        format!("bytes={}", outputs[0].len()),
    ));

    let (ok, detail) = heatmap_trend(opts.heatmap_trials, opts.seed)?;
    out.push(check("experiments", "heat-map best r nonincreasing in n (one-step slack)", ok, detail));
    Ok(out)
}

/// Spiked-Laplace sweep over n ∈ {200, 1000, 5000} and 8 log-spaced r in [0.001, 1].
pub fn heatmap_trend(trials: usize, seed: u64) -> Result<(bool, String)> {
    let mut cfg = ExperimentConfig::new(crate::fixtures::make_fixture(&FixtureSpec::spiked_laplace())?);
    cfg.n_grid = vec![200, 1000, 5000];
    cfg.r_grid = log_spaced(0.001, 1.0, 8);
    cfg.trials = trials;
    cfg.seed = seed;
    let cells = run_mse_heatmap(&cfg)?;
    let best = best_r_indices(&cells, &cfg.n_grid);
    let ok = best.windows(2).all(|w| w[1] <= w[0] + 1) && best[best.len() - 1] <= best[0] + 1;
    let r: Vec<String> = best.iter().map(|&b| format!("{:.4}", cfg.r_grid[b])).collect();
    Ok((ok, format!("best_r={} trials={trials}", r.join("/"))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_floor_grid_reports_every_cell() {
        let (_, detail) = delta_floor_grid();
        assert_eq!(detail.split(' ').count(), 4);
    }

    #[test]
    fn sign_setting_is_feasible() {
        let (n, delta, eps_max, gamma) = SIGN_CHECK;
        let r = solve_min_smoothing(&Distribution::standard_normal(), eps_max, delta, n, gamma).unwrap();
        assert!(r >= 2.0 * eps_max && r < 1.0);
    }
}
