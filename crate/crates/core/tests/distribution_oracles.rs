//! Independent oracles for the truncated-distribution estimators: a direct
//! (non log-space) likelihood for grid-search comparison, and Monte Carlo
//! checks for the closed-form estimator and the sampler.

use proptest::prelude::*;

use trunccount::distribution::{
    fit_mle, log_likelihood, moore_estimate, score, std_error, CountSample, FitOptions,
    TruncatedPoissonModel,
};
use trunccount::TruncationBound;

/// Direct-summation log-likelihood: plain `lambda^j / j!` weights in f64,
/// no shared code with the implementation's log-space path.
fn naive_loglik(values: &[u32], lambda: f64, r: u32) -> f64 {
    let mut z = 0.0;
    let mut term = 1.0;
    for j in 0..=r {
        if j > 0 {
            term *= lambda / j as f64;
        }
        z += term;
    }
    values
        .iter()
        .map(|&x| {
            let mut t = 1.0;
            for j in 1..=x {
                t *= lambda / j as f64;
            }
            (t / z).ln()
        })
        .sum()
}

/// Two-stage dense grid argmax of the naive likelihood over (0, 50].
fn grid_search_mle(values: &[u32], r: u32) -> f64 {
    let mut best = (f64::NEG_INFINITY, 0.0);
    let mut lam = 0.01;
    while lam <= 50.0 {
        let ll = naive_loglik(values, lam, r);
        if ll > best.0 {
            best = (ll, lam);
        }
        lam += 0.01;
    }
    let center = best.1;
    let mut lam = (center - 0.02).max(1e-6);
    while lam <= center + 0.02 {
        let ll = naive_loglik(values, lam, r);
        if ll > best.0 {
            best = (ll, lam);
        }
        lam += 1e-5;
    }
    best.1
}

#[test]
fn mle_matches_grid_search_oracle_on_seeded_samples() {
    let cases = [
        (2.0, 10u32),
        (5.0, 10),
        (8.0, 10),
        (2.0, 25),
        (5.0, 25),
        (8.0, 25),
        (12.0, 25),
        (18.0, 25),
        (22.0, 25),
        (30.0, 25),
    ];
    let mut checked = 0;
    for (i, &(lambda, r)) in cases.iter().enumerate() {
        for rep in 0..2 {
            let seed = 1000 + (i * 2 + rep) as u64;
            let model = TruncatedPoissonModel::new(lambda, TruncationBound::new(r)).unwrap();
            let sample = model.sample(80, seed);
            let fit = fit_mle::<f64>(&sample, &FitOptions::default()).unwrap();
            assert!(fit.converged, "case {i} rep {rep} did not converge");
            let oracle = grid_search_mle(sample.values(), r);
            assert!(
                (fit.lambda_hat - oracle).abs() <= 1e-4,
                "lambda {lambda}, r {r}, seed {seed}: mle {} vs grid {oracle}",
                fit.lambda_hat
            );
            checked += 1;
        }
    }
    assert_eq!(checked, 20);
}

#[test]
fn loglik_agrees_with_naive_summation() {
    let model = TruncatedPoissonModel::new(9.5, TruncationBound::new(25)).unwrap();
    let sample = model.sample(120, 7);
    for lambda in [0.5, 3.0, 9.5, 20.0, 40.0] {
        let fast = log_likelihood(&sample, lambda).unwrap();
        let slow = naive_loglik(sample.values(), lambda, 25);
        assert!(
            (fast - slow).abs() <= 1e-9 * slow.abs(),
            "lambda {lambda}: {fast} vs {slow}"
        );
    }
}

#[test]
fn untruncated_limit_recovers_sample_mean() {
    // Bound far above the data: the MLE collapses to xbar.
    for seed in 0..5u64 {
        let model = TruncatedPoissonModel::new(8.0, TruncationBound::new(300)).unwrap();
        let sample = model.sample(60, 500 + seed);
        let max = *sample.values().iter().max().unwrap();
        assert!(max <= 100, "sample unexpectedly extreme");
        let xbar: f64 = sample.mean();
        let fit = fit_mle::<f64>(&sample, &FitOptions::default()).unwrap();
        assert!(
            (fit.lambda_hat - xbar).abs() <= 1e-6 * xbar + 1e-9,
            "seed {seed}: {} vs xbar {xbar}",
            fit.lambda_hat
        );
    }
}

#[test]
fn stationarity_of_converged_fits() {
    for seed in 0..10u64 {
        let lambda = 3.0 + seed as f64 * 2.0;
        let model = TruncatedPoissonModel::new(lambda, TruncationBound::new(25)).unwrap();
        let sample = model.sample(150, 9000 + seed);
        let fit = fit_mle::<f64>(&sample, &FitOptions::default()).unwrap();
        if fit.converged && fit.lambda_hat > 0.0 {
            let s = score(fit.lambda_hat, &sample).unwrap();
            assert!(
                s.abs() <= 1e-8 * sample.len() as f64,
                "seed {seed}: score {s}"
            );
        }
    }
}

#[test]
fn truncated_mean_increasing_in_lambda_and_below_it() {
    for r in [1u32, 5, 25, 60] {
        let mut prev = -1.0;
        let mut lam = 0.25;
        while lam <= 60.0 {
            let model = TruncatedPoissonModel::new(lam, TruncationBound::new(r)).unwrap();
            let mu = model.mean();
            assert!(mu > prev, "mean not increasing at lambda {lam}, r {r}");
            assert!(mu < lam, "mean {mu} not below lambda {lam} at r {r}");
            prev = mu;
            lam += 0.25;
        }
    }
}

#[test]
fn moore_monte_carlo_unbiasedness() {
    // 10000 seeded samples of n = 50 at lambda = 3, r = 6. The estimator
    // mean must land within 3 Monte Carlo standard errors of the truth;
    // this adjudicates the counting rule (values strictly below the bound).
    let model = TruncatedPoissonModel::new(3.0, TruncationBound::new(6)).unwrap();
    let mut estimates = Vec::with_capacity(10_000);
    for i in 0..10_000u64 {
        let sample = model.sample(50, 40_000 + i);
        estimates.push(moore_estimate::<f64>(&sample).unwrap());
    }
    let n = estimates.len() as f64;
    let mean: f64 = estimates.iter().sum::<f64>() / n;
    let var: f64 = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let mc_se = (var / n).sqrt();
    assert!(
        (mean - 3.0).abs() <= 3.0 * mc_se,
        "estimator mean {mean} outside 3 * {mc_se} of 3.0"
    );
}

#[test]
fn sample_mean_tracks_truncated_mean() {
    let model = TruncatedPoissonModel::new(12.0, TruncationBound::new(25)).unwrap();
    let n = 10_000;
    let sample = model.sample(n, 77);
    let emp: f64 = sample.mean();
    let band = 3.0 * model.variance().sqrt() / (n as f64).sqrt();
    assert!((emp - model.mean()).abs() <= band);
}

#[test]
fn std_error_finite_difference_cross_check() {
    // Observed information as the negative derivative of the
    // per-observation score (x - mu(lambda)) / lambda at x = mu.
    for &(lambda, r) in &[(11.969, 25u32), (5.0, 12), (20.0, 25)] {
        let bound = TruncationBound::new(r);
        let eps = 1e-6 * lambda;
        let mu = |l: f64| TruncatedPoissonModel::new(l, bound).unwrap().mean();
        let mu0 = mu(lambda);
        let score_at = |l: f64| (mu0 - mu(l)) / l;
        let info = -(score_at(lambda + eps) - score_at(lambda - eps)) / (2.0 * eps);
        let se_fd = 1.0 / (200.0 * info).sqrt();
        let se = std_error::<f64>(lambda, bound, 200);
        assert!(
            (se - se_fd).abs() <= 1e-5 * se_fd,
            "lambda {lambda}, r {r}: analytic {se} vs fd {se_fd}"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn pmf_normalizes(lambda in 0.1f64..50.0, r in 0u32..=60) {
        let model = TruncatedPoissonModel::new(lambda, TruncationBound::new(r)).unwrap();
        let total: f64 = (0..=r).map(|x| model.pmf(x)).sum();
        prop_assert!((total - 1.0).abs() < 1e-10, "total {} at lambda {} r {}", total, lambda, r);
    }

    #[test]
    fn cdf_monotone_and_capped(lambda in 0.1f64..40.0, r in 0u32..=40) {
        let model = TruncatedPoissonModel::new(lambda, TruncationBound::new(r)).unwrap();
        let mut prev = 0.0;
        for x in 0..=r as i64 {
            let c = model.cdf(x);
            prop_assert!(c >= prev && c <= 1.0);
            prev = c;
        }
        prop_assert!((model.cdf(r as i64) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sampling_is_reproducible(lambda in 0.5f64..30.0, r in 1u32..=40, seed: u64) {
        let model = TruncatedPoissonModel::new(lambda, TruncationBound::new(r)).unwrap();
        let a = model.sample(64, seed);
        let b = model.sample(64, seed);
        prop_assert_eq!(a.values(), b.values());
        prop_assert!(a.values().iter().all(|&v| v <= r));
    }

    #[test]
    fn log_pmf_consistent_with_pmf(lambda in 0.1f64..50.0, r in 0u32..=50, x in 0u32..=50) {
        let model = TruncatedPoissonModel::new(lambda, TruncationBound::new(r)).unwrap();
        if x <= r {
            let lp = model.log_pmf(x).unwrap();
            prop_assert!((lp.exp() - model.pmf(x)).abs() <= 1e-12 * model.pmf(x).max(1e-300));
        } else {
            prop_assert!(model.log_pmf(x).is_err());
            prop_assert_eq!(model.pmf(x), 0.0);
        }
    }
}

#[test]
fn count_sample_round_trip_with_estimators() {
    // Moore and the MLE agree loosely on clean mid-range data.
    let model = TruncatedPoissonModel::new(6.0, TruncationBound::new(25)).unwrap();
    let sample = model.sample(400, 11);
    let mle = fit_mle::<f64>(&sample, &FitOptions::default()).unwrap();
    let moore = moore_estimate::<f64>(&sample).unwrap();
    assert!((mle.lambda_hat - moore).abs() < 0.5);
    assert_eq!(
        CountSample::new(sample.values().to_vec(), sample.bound()).unwrap(),
        sample
    );
}
