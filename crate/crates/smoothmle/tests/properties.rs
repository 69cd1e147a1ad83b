use proptest::prelude::*;
use smoothmle::estimators::{empirical_score, local_mle, EstimatorConfig};
use smoothmle::experiments::trial_draws;
use smoothmle::rng::ReplayNoise;
use smoothmle::{Component, Distribution, SmoothedModel};

fn mixture() -> impl Strategy<Value = Distribution> {
    prop::collection::vec((0.1f64..1.0, -3.0f64..3.0, 0.2f64..2.0), 1..4).prop_map(|parts| {
        let total: f64 = parts.iter().map(|p| p.0).sum();
        Distribution::mixture(
            parts.into_iter().map(|(w, mu, s)| (w / total, Component::Normal { mean: mu, sigma: s })).collect(),
        )
        .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn quantile_inverts_cdf(d in mixture(), p in 0.001f64..0.999) {
        let x = d.quantile(p).unwrap();
        prop_assert!((d.cdf(x) - p).abs() < 1e-9);
    }

    #[test]
    fn laplace_quantile_inverts_cdf(scale in 0.1f64..5.0, p in 0.001f64..0.999) {
        let d = Distribution::laplace(scale).unwrap();
        prop_assert!((d.cdf(d.quantile(p).unwrap()) - p).abs() < 1e-12);
    }

    #[test]
    fn fisher_info_bounded_by_inverse_r_squared(d in mixture(), r in 0.05f64..2.0) {
        let i = SmoothedModel::new(&d, r).unwrap().fisher_info().unwrap();
        prop_assert!(i > 0.0 && i * r * r <= 1.0 + 1e-9);
    }

    #[test]
    fn score_derivative_floor(d in mixture(), r in 0.05f64..2.0, t in -8.0f64..8.0) {
        let m = SmoothedModel::new(&d, r).unwrap();
        prop_assert!(m.score_deriv(t) * r * r >= -1.0 - 1e-9);
    }

    #[test]
    fn local_mle_is_shift_equivariant(shift in -50.0f64..50.0, trial in 0usize..1000) {
        let d = Distribution::laplace(1.0).unwrap();
        let cfg = EstimatorConfig::default();
        let (xs, zs) = trial_draws(&d, 0.0, 150, 2, trial);
        let base = local_mle(&d, 0.3, &xs, (-1.0, 1.0), &mut ReplayNoise::new(&zs), &cfg).unwrap();
        let moved: Vec<f64> = xs.iter().map(|x| x + shift).collect();
        let res = local_mle(&d, 0.3, &moved, (shift - 1.0, shift + 1.0), &mut ReplayNoise::new(&zs), &cfg).unwrap();
        prop_assert!((res.lambda_hat - base.lambda_hat - shift).abs() <= 2.0 * cfg.root_tol);
    }

    #[test]
    fn empirical_score_monotone_for_gaussian_base(mu in -2.0f64..2.0, sigma in 0.2f64..3.0, lo in -1.0f64..0.0, gap in 0.01f64..1.0) {
        let d = Distribution::normal(mu, sigma).unwrap();
        let m = SmoothedModel::new(&d, 0.3).unwrap();
        let (xs, _) = trial_draws(&d, 0.0, 50, 1, 0);
        prop_assert!(empirical_score(&m, &xs, lo) <= empirical_score(&m, &xs, lo + gap));
    }
}
