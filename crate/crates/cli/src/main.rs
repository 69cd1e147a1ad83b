//! `smle`: command-line driver for smoothed-MLE location estimation.
//!
//! Exit status: 0 on success, 1 when `check-invariants` finds a violation,
//! 2 for invalid input, 3 for numerical failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use smoothmle::estimators::{EstimatorConfig, GlobalMle};
use smoothmle::experiments::{
    coverage_csv, errors_csv, fmt_f64, heatmap_csv, log_spaced, run_coverage, run_error_distribution, run_mse_heatmap,
    EstimatorKind, ExperimentConfig,
};
use smoothmle::invariants::{run_all, InvariantOptions};
use smoothmle::lowerbound::{indistinguishable_shift_diagnostics, lower_bound_report, ReportOptions};
use smoothmle::rng::stream;
use smoothmle::{Distribution, SmleError, SmoothedModel};

#[derive(Parser, Debug)]
#[command(name = "smle", version, about = "Location estimation with Gaussian-smoothed maximum likelihood")]
struct Cli {
    /// Worker threads for parallel sections (output does not depend on it)
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate the location of a sample file with the two-stage smoothed MLE
    Estimate(EstimateArgs),
    /// Print the smoothed Fisher information I_r and the 1/r^2 bound
    Fisher(FisherArgs),
    /// Emit x, s_r(x), s_r'(x) as CSV
    ScoreScan(ScanArgs),
    /// MSE of the full-line smoothed MLE over an (n, r) grid
    Heatmap(HeatmapArgs),
    /// Paired per-trial errors of several estimators
    Errors(ErrorsArgs),
    /// Coverage of the predicted error bound by the two-stage estimator
    Coverage(CoverageArgs),
    /// Two-point lower-bound report as JSON
    Lowerbound(LowerboundArgs),
    /// Run the full property suite; exits 1 on any violation
    CheckInvariants(InvariantArgs),
}

#[derive(Args, Debug)]
struct DistArg {
    /// Distribution description (JSON file)
    #[arg(long)]
    dist: PathBuf,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    #[command(flatten)]
    dist: DistArg,
    /// Sample file: one number per line, `#` lines ignored
    #[arg(long)]
    samples: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Fixed smoothing radius instead of the r* rule
    #[arg(long)]
    r: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct FisherArgs {
    #[command(flatten)]
    dist: DistArg,
    #[arg(long)]
    r: f64,
}

#[derive(Args, Debug)]
struct ScanArgs {
    #[command(flatten)]
    dist: DistArg,
    #[arg(long)]
    r: f64,
    /// Number of equally spaced points
    #[arg(long, default_value_t = 1001)]
    points: usize,
    #[arg(long, allow_hyphen_values = true)]
    lo: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    hi: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct HeatmapArgs {
    #[command(flatten)]
    dist: DistArg,
    /// Comma-separated sample sizes
    #[arg(long, value_delimiter = ',', default_values_t = [200usize, 1000, 5000])]
    n_grid: Vec<usize>,
    /// Comma-separated radii (default: 8 log-spaced values in [0.001, 1])
    #[arg(long, value_delimiter = ',')]
    r_grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = 400)]
    trials: usize,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    lambda: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ErrorsArgs {
    #[command(flatten)]
    dist: DistArg,
    #[arg(long, default_value_t = 500)]
    n: usize,
    #[arg(long, default_value_t = 0.05)]
    r: f64,
    #[arg(long, default_value_t = 2000)]
    trials: usize,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Comma-separated estimator names
    #[arg(long, value_delimiter = ',',
          default_values_t = ["smoothed_mle".to_string(), "unsmoothed_mle".into(), "mean".into(), "median".into(), "median_of_means".into()])]
    estimators: Vec<String>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    lambda: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CoverageArgs {
    #[command(flatten)]
    dist: DistArg,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long, default_value_t = 2000)]
    trials: usize,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    lambda: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct LowerboundArgs {
    #[command(flatten)]
    dist: DistArg,
    #[arg(long)]
    r: f64,
    /// Two-point shift 2ε (at most r/2)
    #[arg(long)]
    shift: f64,
    #[arg(long, default_value_t = 0.05)]
    kappa: f64,
    /// Highest moment order checked
    #[arg(long, default_value_t = 4)]
    kmax: u32,
    /// Sample count for the δ floor and the TV estimate
    #[arg(long)]
    n: Option<usize>,
    /// Monte Carlo trials for 1 − TV (requires --n, at least 1000)
    #[arg(long)]
    trials: Option<usize>,
    /// Constant C in the δ floor
    #[arg(long, default_value_t = 1.0)]
    floor_constant: f64,
    /// δ used for the indistinguishable-shift diagnostics (requires --n)
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct InvariantArgs {
    /// Monte Carlo trials for estimator, coverage and TV checks
    #[arg(long, default_value_t = 2000)]
    trials: usize,
    /// Trials per heat-map cell in the trend check
    #[arg(long, default_value_t = 200)]
    heatmap_trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

enum Failure {
    Usage(String),
    Numeric(String),
    Violations(usize),
}

impl From<SmleError> for Failure {
    fn from(e: SmleError) -> Self {
        if e.is_numeric() {
            Failure::Numeric(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(format!("cannot write output: {e}"))
    }
}

type Outcome = Result<(), Failure>;

fn read_dist(path: &Path) -> Result<Distribution, Failure> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(Distribution::from_json(&text)?)
}

fn read_samples(path: &Path) -> Result<Vec<f64>, Failure> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let v: f64 =
            t.parse().map_err(|_| Failure::Usage(format!("{}:{}: not a number: {t:?}", path.display(), i + 1)))?;
        if !v.is_finite() {
            return Err(Failure::Usage(format!("{}:{}: non-finite value", path.display(), i + 1)));
        }
        out.push(v);
    }
    if out.is_empty() {
        return Err(Failure::Usage(format!("{}: no samples", path.display())));
    }
    Ok(out)
}

fn emit(out: Option<&Path>, text: &str, w: &mut dyn Write) -> Outcome {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", p.display()))),
        None => Ok(w.write_all(text.as_bytes())?),
    }
}

fn positive(name: &str, v: f64) -> Outcome {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Failure::Usage(format!("--{name} must be positive, got {v}")))
    }
}

fn estimate(a: &EstimateArgs, w: &mut dyn Write) -> Outcome {
    let d = read_dist(&a.dist.dist)?;
    let xs = read_samples(&a.samples)?;
    let cfg = EstimatorConfig { delta: a.delta, gamma: a.gamma, r_override: a.r, ..Default::default() };
    let g = GlobalMle::new(&d, xs.len(), &cfg)?;
    let res = g.estimate(&xs, &mut stream(a.seed, "estimate", &[]))?;
    let warnings: Vec<String> = res.warnings.iter().map(|w| format!("{w:?}")).collect();
    writeln!(w, "seed={}", a.seed)?;
    writeln!(w, "n={}", xs.len())?;
    writeln!(w, "lambda_hat={:?}", res.lambda_hat)?;
    writeln!(w, "interval_lo={:?}", res.interval.0)?;
    writeln!(w, "interval_hi={:?}", res.interval.1)?;
    writeln!(w, "r_used={:?}", res.r_used)?;
    writeln!(w, "fisher_r={:?}", res.fisher_r)?;
    writeln!(w, "predicted_bound={:?}", res.predicted_bound)?;
    writeln!(w, "refinement_factor={:?}", res.refinement_factor)?;
    writeln!(w, "warnings={}", warnings.join(";"))?;
    Ok(())
}

fn fisher(a: &FisherArgs, w: &mut dyn Write) -> Outcome {
    let d = read_dist(&a.dist.dist)?;
    let m = SmoothedModel::new(&d, a.r)?;
    let i = m.fisher_info()?;
    writeln!(w, "r={:?}", a.r)?;
    writeln!(w, "I_r={i:?}")?;
    writeln!(w, "bound={:?}", 1.0 / (a.r * a.r))?;
    Ok(())
}

fn score_scan(a: &ScanArgs, w: &mut dyn Write) -> Outcome {
    let d = read_dist(&a.dist.dist)?;
    let m = SmoothedModel::new(&d, a.r)?;
    if a.points < 2 {
        return Err(Failure::Usage("--points must be at least 2".into()));
    }
    let default = m.scan_points(2);
    let (lo, hi) = (a.lo.unwrap_or(default[0]), a.hi.unwrap_or(default[1]));
    if !(lo < hi) {
        return Err(Failure::Usage(format!("--lo {lo} must be below --hi {hi}")));
    }
    let mut s = String::from("x,score,score_deriv\n");
    for i in 0..a.points {
        let x = lo + (hi - lo) * i as f64 / (a.points - 1) as f64;
        let e = m.eval(x);
        let _ = writeln!(s, "{},{},{}", fmt_f64(x), fmt_f64(e.score), fmt_f64(e.score_deriv));
    }
    emit(a.out.as_deref(), &s, w)
}

fn heatmap(a: &HeatmapArgs, w: &mut dyn Write) -> Outcome {
    let mut cfg = ExperimentConfig::new(read_dist(&a.dist.dist)?);
    cfg.n_grid = a.n_grid.clone();
    cfg.r_grid = a.r_grid.clone().unwrap_or_else(|| log_spaced(0.001, 1.0, 8));
    cfg.trials = a.trials;
    cfg.delta = a.delta;
    cfg.lambda_true = a.lambda;
    cfg.seed = a.seed;
    let cells = run_mse_heatmap(&cfg)?;
    if a.out.is_some() {
        writeln!(w, "seed={}", a.seed)?;
        writeln!(w, "cells={}", cells.len())?;
    }
    emit(a.out.as_deref(), &heatmap_csv(&cells), w)
}

fn errors(a: &ErrorsArgs, w: &mut dyn Write) -> Outcome {
    let mut cfg = ExperimentConfig::new(read_dist(&a.dist.dist)?);
    cfg.n_grid = vec![a.n];
    cfg.r_grid = vec![a.r];
    cfg.trials = a.trials;
    cfg.delta = a.delta;
    cfg.lambda_true = a.lambda;
    cfg.seed = a.seed;
    cfg.estimators = a
        .estimators
        .iter()
        .map(|s| EstimatorKind::from_name(s).ok_or_else(|| Failure::Usage(format!("unknown estimator {s:?}"))))
        .collect::<Result<_, _>>()?;
    let series = run_error_distribution(&cfg)?;
    if a.out.is_some() {
        writeln!(w, "seed={}", a.seed)?;
        for s in &series {
            writeln!(w, "{}: mse={} failures={}", s.estimator.name(), fmt_f64(s.mse()), s.failures())?;
        }
    }
    emit(a.out.as_deref(), &errors_csv(&series), w)
}

fn coverage(a: &CoverageArgs, w: &mut dyn Write) -> Outcome {
    let mut cfg = ExperimentConfig::new(read_dist(&a.dist.dist)?);
    cfg.n_grid = vec![a.n];
    cfg.trials = a.trials;
    cfg.delta = a.delta;
    cfg.lambda_true = a.lambda;
    cfg.seed = a.seed;
    let est = EstimatorConfig { gamma: a.gamma, ..Default::default() };
    let rep = run_coverage(&cfg, &est)?;
    if a.out.is_some() {
        writeln!(w, "seed={}", a.seed)?;
        writeln!(w, "r_used={:?}", rep.r_used)?;
        writeln!(w, "predicted_bound={:?}", rep.predicted_bound)?;
        writeln!(w, "failures={}", rep.failures)?;
    }
    emit(a.out.as_deref(), &coverage_csv(&rep), w)
}

fn lowerbound(a: &LowerboundArgs, w: &mut dyn Write) -> Outcome {
    let d = read_dist(&a.dist.dist)?;
    let m = SmoothedModel::new(&d, a.r)?;
    let opts = ReportOptions { n: a.n, floor_constant: a.floor_constant, tv: a.trials.map(|t| (t, a.seed)) };
    let report = lower_bound_report(&m, a.shift / 2.0, a.kappa, a.kmax, &opts)?;
    let mut value = serde_json::to_value(&report).map_err(|e| Failure::Usage(e.to_string()))?;
    value["seed"] = serde_json::json!(a.seed);
    if let (Some(n), Some(delta)) = (a.n, a.delta) {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(SmleError::InvalidProbability(delta).into());
        }
        let diag = indistinguishable_shift_diagnostics(n, delta, report.fisher_r, a.r);
        value["indistinguishable_shift"] = serde_json::to_value(diag).map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let mut text = serde_json::to_string_pretty(&value).map_err(|e| Failure::Usage(e.to_string()))?;
    text.push('\n');
    emit(a.out.as_deref(), &text, w)
}

fn check_invariants(a: &InvariantArgs, w: &mut dyn Write) -> Outcome {
    if a.trials == 0 || a.heatmap_trials == 0 {
        return Err(Failure::Usage("trial counts must be at least 1".into()));
    }
    let opts = InvariantOptions { trials: a.trials, heatmap_trials: a.heatmap_trials, seed: a.seed };
    let checks = run_all(&opts)?;
    writeln!(w, "seed={}", a.seed)?;
    let mut failed = 0;
    for c in &checks {
        if !c.passed {
            failed += 1;
        }
        writeln!(w, "{} {}: {} ({})", if c.passed { "PASS" } else { "FAIL" }, c.module, c.name, c.detail)?;
    }
    writeln!(w, "checks={} failed={failed}", checks.len())?;
    if failed > 0 {
        Err(Failure::Violations(failed))
    } else {
        Ok(())
    }
}

fn start_workers(workers: Option<usize>) -> Outcome {
    if let Some(n) = workers {
        if n == 0 {
            return Err(Failure::Usage("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(format!("cannot start worker pool: {e}")))?;
    }
    Ok(())
}

fn run(command: &Command, w: &mut dyn Write) -> Outcome {
    match command {
        Command::Estimate(a) => estimate(a, w),
        Command::Fisher(a) => {
            positive("r", a.r)?;
            fisher(a, w)
        }
        Command::ScoreScan(a) => {
            positive("r", a.r)?;
            score_scan(a, w)
        }
        Command::Heatmap(a) => heatmap(a, w),
        Command::Errors(a) => errors(a, w),
        Command::Coverage(a) => coverage(a, w),
        Command::Lowerbound(a) => {
            positive("r", a.r)?;
            lowerbound(a, w)
        }
        Command::CheckInvariants(a) => check_invariants(a, w),
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Violations(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Numeric(_) => 3,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Violations(k) => format!("{k} invariant check(s) failed"),
            Failure::Usage(msg) => format!("error: {msg}"),
            Failure::Numeric(msg) => format!("numerical failure: {msg}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let mut out = std::io::BufWriter::new(stdout.lock());
    let result = start_workers(cli.workers).and_then(|()| run(&cli.command, &mut out));
    let flushed = out.flush().map_err(Failure::from);
    match result.and(flushed) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("smle: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}
