//! Acceptance criteria 1-10. Prints one PASS/FAIL line per criterion and
//! exits nonzero when any criterion fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use smoothmle::estimators::{local_mle, EstimatorConfig, GlobalMle};
use smoothmle::experiments::{run_error_distribution, trial_draws, EstimatorKind, ExperimentConfig};
use smoothmle::invariants::{heatmap_trend, smoothing_checks, tv_oracle_grid, CheckResult, RADII};
use smoothmle::lowerbound::{gaussian_tv_complement, hellinger_sq, kl_divergence};
use smoothmle::rng::ReplayNoise;
use smoothmle::{Distribution, FixtureSpec, SmoothedModel};

type Verdict = Result<(bool, String), String>;

struct Criterion {
    id: u32,
    title: &'static str,
    budget_s: f64,
    run: fn() -> Verdict,
}

fn fixtures() -> Vec<(&'static str, Distribution)> {
    FixtureSpec::all().into_iter().map(|f| (f.name(), f.build().expect("fixture"))).collect()
}

fn summarize(checks: &[CheckResult], pick: impl Fn(&str) -> bool) -> (bool, String) {
    let picked: Vec<&CheckResult> = checks.iter().filter(|c| pick(&c.name)).collect();
    let failed: Vec<String> =
        picked.iter().filter(|c| !c.passed).map(|c| format!("{} ({})", c.name, c.detail)).collect();
    let detail = if failed.is_empty() {
        format!("{} checks", picked.len())
    } else {
        format!("{}/{} failed: {}", failed.len(), picked.len(), failed.join("; "))
    };
    (!picked.is_empty() && failed.is_empty(), detail)
}

fn c1_fisher_identity() -> Verdict {
    let mut ok = true;
    let (mut g_worst, mut d_worst) = (0.0f64, 0.0f64);
    let g = Distribution::standard_normal();
    let dirac = Distribution::dirac(0.0).map_err(|e| e.to_string())?;
    for r in [0.1, 0.5, 1.0, 2.0] {
        let i = SmoothedModel::new(&g, r).and_then(|m| m.fisher_info()).map_err(|e| e.to_string())?;
        let err = (i - 1.0 / (1.0 + r * r)).abs();
        g_worst = g_worst.max(err);
        ok &= err <= 1e-6;
        let i = SmoothedModel::new(&dirac, r).and_then(|m| m.fisher_info()).map_err(|e| e.to_string())?;
        let err = (i - 1.0 / (r * r)).abs();
        d_worst = d_worst.max(err);
        ok &= err <= 1e-9;
    }
    Ok((ok, format!("gaussian max_err={g_worst:.2e} (tol 1e-6), dirac max_err={d_worst:.2e} (tol 1e-9)")))
}

fn smoothing_suite() -> Result<Vec<CheckResult>, String> {
    smoothing_checks().map_err(|e| e.to_string())
}

fn c2_fisher_bounds() -> Verdict {
    let checks = smoothing_suite()?;
    Ok(summarize(&checks, |n| n.starts_with("I_r <=") || n.starts_with("I_r >=")))
}

fn c3_derivative_floor() -> Verdict {
    let checks = smoothing_suite()?;
    Ok(summarize(&checks, |n| n.starts_with("s_r' >=")))
}

fn c4_moments() -> Verdict {
    let checks = smoothing_suite()?;
    Ok(summarize(&checks, |n| {
        n.starts_with("offset score moments")
            || n.starts_with("centered score moments")
            || n.starts_with("expected score linear")
            || n.starts_with("second moment stable")
    }))
}

fn c5_local_exactness() -> Verdict {
    let cfg = EstimatorConfig::default();
    let mut worst = 0.0f64;
    let mut count = 0;
    for (sigma, r) in [(1.0, 0.2), (0.5, 1.0), (3.0, 0.05)] {
        let d = Distribution::normal(0.0, sigma).map_err(|e| e.to_string())?;
        for t in 0..100 {
            let lambda = 0.7;
            let (xs, zs) = trial_draws(&d, lambda, 200, 5, t);
            let mean = xs.iter().zip(&zs).map(|(x, z)| x + r * z).sum::<f64>() / xs.len() as f64;
            let res =
                local_mle(&d, r, &xs, (lambda - 2.0 * sigma, lambda + 2.0 * sigma), &mut ReplayNoise::new(&zs), &cfg)
                    .map_err(|e| e.to_string())?;
            if !res.root_found() {
                return Ok((false, format!("no root at sigma={sigma} trial={t}")));
            }
            worst = worst.max((res.lambda_hat - mean).abs());
            count += 1;
        }
    }
    Ok((worst <= cfg.root_tol, format!("max |lambda_hat - perturbed mean|={worst:.2e} over {count} trials (tol 1e-9)")))
}

fn c6_global_coverage() -> Verdict {
    let (n, delta, trials) = (1000usize, 0.05, 2000usize);
    let cfg = EstimatorConfig { delta, ..Default::default() };
    let mut ok = true;
    let mut parts = Vec::new();
    let lambda = 1.5;
    for (name, d) in [
        ("gaussian", Distribution::standard_normal()),
        ("laplace", Distribution::laplace(1.0).map_err(|e| e.to_string())?),
    ] {
        let g = GlobalMle::new(&d, n, &cfg).map_err(|e| e.to_string())?;
        let mut hits = 0usize;
        for t in 0..trials {
            let (xs, zs) = trial_draws(&d, lambda, n, 11, t);
            if let Ok(e) = g.estimate(&xs, &mut ReplayNoise::new(&zs)) {
                let bound = 1.2 * (2.0 * (1.0 / delta).ln() / (n as f64 * e.fisher_r)).sqrt();
                if (e.lambda_hat - lambda).abs() <= bound {
                    hits += 1;
                }
            }
        }
        let frac = hits as f64 / trials as f64;
        ok &= frac >= 0.95;
        parts.push(format!("{name}: coverage={frac:.4} r*={:.4}", g.model().r()));
    }
    Ok((ok, format!("{} (need >= 0.95, {trials} trials)", parts.join(", "))))
}

fn spiked_laplace_config(
    n: usize,
    r: f64,
    trials: usize,
    estimators: Vec<EstimatorKind>,
) -> Result<ExperimentConfig, String> {
    let d = FixtureSpec::spiked_laplace().build().map_err(|e| e.to_string())?;
    let mut cfg = ExperimentConfig::new(d);
    cfg.n_grid = vec![n];
    cfg.r_grid = vec![r];
    cfg.trials = trials;
    cfg.estimators = estimators;
    Ok(cfg)
}

fn mse_of(cfg: &ExperimentConfig) -> Result<Vec<f64>, String> {
    let series = run_error_distribution(cfg).map_err(|e| e.to_string())?;
    Ok(series.iter().map(|s| s.mse()).collect())
}

fn c7_spiked_orderings() -> Verdict {
    use EstimatorKind::*;
    let a = mse_of(&spiked_laplace_config(500, 0.05, 2000, vec![SmoothedMle, UnsmoothedMle, Mean])?)?;
    let ok_a = a[0] < a[1] && a[0] < a[2];
    let b = mse_of(&spiked_laplace_config(3000, 0.05, 400, vec![UnsmoothedMle, Mean])?)?;
    let ok_b = b[0] < b[1];
    let (ok_c, detail_c) = heatmap_trend(200, 0).map_err(|e| e.to_string())?;
    Ok((
        ok_a && ok_b && ok_c,
        format!(
            "(a) n=500 mse smoothed={:.3e} unsmoothed={:.3e} mean={:.3e} [{}]; (b) n=3000 mse unsmoothed={:.3e} mean={:.3e} [{}]; (c) {detail_c} [{}]",
            a[0], a[1], a[2], verdict(ok_a), b[0], b[1], verdict(ok_b), verdict(ok_c)
        ),
    ))
}

fn c8_lowerbound_oracle() -> Verdict {
    let (tv_ok, tv_detail) = tv_oracle_grid(4000, 0).map_err(|e| e.to_string())?;
    let mut law_worst = 0.0f64;
    let mut hell_worst = 0.0f64;
    for (_, d) in fixtures() {
        for &r in &RADII {
            let m = SmoothedModel::new(&d, r).map_err(|e| e.to_string())?;
            let i = m.fisher_info().map_err(|e| e.to_string())?;
            let eps = r / 64.0;
            let kl = kl_divergence(&m, 2.0 * eps).map_err(|e| e.to_string())?;
            law_worst = law_worst.max((kl / (eps * eps) / (2.0 * i) - 1.0).abs());
            for eps in [r / 64.0, r / 16.0, r / 8.0, r / 4.0] {
                let kl = kl_divergence(&m, 2.0 * eps).map_err(|e| e.to_string())?;
                let h2 = hellinger_sq(&m, 2.0 * eps).map_err(|e| e.to_string())?;
                hell_worst = hell_worst.max(h2 / kl);
            }
        }
    }
    let ok = tv_ok && law_worst <= 0.05 && hell_worst <= 0.26;
    Ok((
        ok,
        format!(
            "tv grid {tv_detail} [{}]; KL law max_rel_err={law_worst:.3e} [{}]; max H^2/KL={hell_worst:.4} [{}]",
            verdict(tv_ok),
            verdict(law_worst <= 0.05),
            verdict(hell_worst <= 0.26)
        ),
    ))
}

fn c9_two_point() -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    let dirac = Distribution::dirac(0.0).map_err(|e| e.to_string())?;
    for sigma in [0.5, 1.0, 2.0] {
        let m = SmoothedModel::new(&dirac, sigma).map_err(|e| e.to_string())?;
        let i = m.fisher_info().map_err(|e| e.to_string())?;
        for l in [3.0f64, 6.0] {
            let delta = (-l).exp();
            for n in [100usize, 1000] {
                let shift = 2.0 * 0.9 * (2.0 * l / (n as f64 * i)).sqrt();
                let tv_c = gaussian_tv_complement(shift, sigma, n);
                ok &= tv_c > 2.0 * delta;
                if sigma == 1.0 {
                    parts.push(format!("L={l},n={n}: 1-TV={tv_c:.4e} vs 2delta={:.4e}", 2.0 * delta));
                }
            }
        }
    }
    Ok((ok, format!("{} (sigma in 0.5/1/2 give identical values)", parts.join("; "))))
}

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name).to_string_lossy().into_owned()
}

fn smle(args: &[String], workers: usize) -> Result<(Option<i32>, Vec<u8>), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_smle"))
        .arg("--workers")
        .arg(workers.to_string())
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    Ok((out.status.code(), out.stdout))
}

fn c10_determinism() -> Verdict {
    let dir = std::env::temp_dir().join(format!("smle-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let samples: PathBuf = dir.join("samples.txt");
    let (xs, _) = trial_draws(&Distribution::laplace(1.0).map_err(|e| e.to_string())?, 0.4, 400, 3, 0);
    let text: String =
        std::iter::once("# laplace, lambda = 0.4\n".to_string()).chain(xs.iter().map(|x| format!("{x:?}\n"))).collect();
    std::fs::write(&samples, text).map_err(|e| e.to_string())?;

    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<String>>();
    let lap = data("laplace.json");
    let spiked = data("spiked_laplace.json");
    let gauss = data("gaussian.json");
    let cases: Vec<(&str, Vec<String>)> = vec![
        ("estimate", s(&["estimate", "--dist", &lap, "--samples", samples.to_str().unwrap(), "--seed", "9"])),
        ("fisher", s(&["fisher", "--dist", &spiked, "--r", "0.05"])),
        ("score-scan", s(&["score-scan", "--dist", &spiked, "--r", "0.05", "--points", "200"])),
        (
            "heatmap",
            s(&[
                "heatmap",
                "--dist",
                &spiked,
                "--n-grid",
                "100,400",
                "--r-grid",
                "0.01,0.1,0.5",
                "--trials",
                "12",
                "--seed",
                "4",
            ]),
        ),
        ("errors", s(&["errors", "--dist", &spiked, "--n", "300", "--trials", "24", "--seed", "4"])),
        ("coverage", s(&["coverage", "--dist", &lap, "--n", "300", "--trials", "40", "--seed", "4"])),
        (
            "lowerbound",
            s(&[
                "lowerbound",
                "--dist",
                &gauss,
                "--r",
                "0.5",
                "--shift",
                "0.05",
                "--n",
                "50",
                "--trials",
                "1000",
                "--delta",
                "0.05",
            ]),
        ),
        ("check-invariants", s(&["check-invariants", "--trials", "20", "--heatmap-trials", "2", "--seed", "1"])),
    ];
    let mut bad = Vec::new();
    for (name, args) in &cases {
        let a = smle(args, 1)?;
        let b = smle(args, 1)?;
        let c = smle(args, 8)?;
        if a.1.is_empty() || a != b || a != c {
            bad.push(format!("{name} (exit {:?}/{:?}/{:?})", a.0, b.0, c.0));
        }
    }
    let _ = std::fs::remove_dir_all(&dir);
    let ok = bad.is_empty();
    let detail = if ok {
        format!("{} subcommands identical across 2 runs and 1 vs 8 workers", cases.len())
    } else {
        format!("differing: {}", bad.join(", "))
    };
    Ok((ok, detail))
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn main() {
    let criteria = [
        Criterion { id: 1, title: "Gaussian and Dirac Fisher identities", budget_s: 1.0, run: c1_fisher_identity },
        Criterion { id: 2, title: "I_r upper and lower bounds", budget_s: 30.0, run: c2_fisher_bounds },
        Criterion { id: 3, title: "score-derivative floor", budget_s: 30.0, run: c3_derivative_floor },
        Criterion { id: 4, title: "score moment bounds", budget_s: 120.0, run: c4_moments },
        Criterion { id: 5, title: "local MLE exact on Gaussians", budget_s: 5.0, run: c5_local_exactness },
        Criterion { id: 6, title: "global MLE coverage", budget_s: 120.0, run: c6_global_coverage },
        Criterion { id: 7, title: "spiked-Laplace orderings", budget_s: 300.0, run: c7_spiked_orderings },
        Criterion { id: 8, title: "lower-bound oracles", budget_s: 120.0, run: c8_lowerbound_oracle },
        Criterion { id: 9, title: "two-point consistency", budget_s: 1.0, run: c9_two_point },
        Criterion { id: 10, title: "CLI determinism", budget_s: 120.0, run: c10_determinism },
    ];
    let only: Option<u32> = std::env::var("SMLE_ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = Vec::new();
    for c in criteria.iter().filter(|c| only.is_none_or(|o| o == c.id)) {
        let t0 = Instant::now();
        let (ok, detail) = match (c.run)() {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        let secs = t0.elapsed().as_secs_f64();
        let timing = if secs <= c.budget_s { "" } else { " OVER BUDGET" };
        println!(
            "criterion {:>2} {}: {} | {detail} | {secs:.1}s of {:.0}s{timing}",
            c.id,
            verdict(ok),
            c.title,
            c.budget_s
        );
        if !ok {
            failed.push(c.id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
