//! The hierarchical likelihood `h = L1(beta; y | u) + L2(sigma2, u)` and its
//! analytic derivatives.
//!
//! `L1` is the truncated-Poisson conditional log-likelihood with log-rates
//! `eta = X beta + Z u`; `L2` is the normal log-density of the cluster
//! effects. Per-row truncated moments are evaluated from `eta` directly so
//! huge proposed rates cannot overflow.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::distribution::{
    cumulative_from_pmf, draw_from_cdf, ln_factorials, moments_with_table, pmf_table_from_log_lambda,
    TruncationBound,
};
use crate::error::{Error, Result};
use crate::real::{real, real_of_usize, Real};

use super::design::{FixedDesign, RandomDesign};

pub(crate) fn check_dims<F: Real>(
    beta: &[F],
    u: &[F],
    x: &FixedDesign<F>,
    z: &RandomDesign,
    y: Option<&[u32]>,
) -> Result<()> {
    if beta.len() != x.p() {
        return Err(Error::DimensionMismatch(format!(
            "beta has {} entries, design has {} columns",
            beta.len(),
            x.p()
        )));
    }
    if u.len() != z.q() {
        return Err(Error::DimensionMismatch(format!(
            "u has {} entries, {} clusters",
            u.len(),
            z.q()
        )));
    }
    if x.n() != z.n() {
        return Err(Error::DimensionMismatch(format!(
            "fixed design has {} rows, random design has {}",
            x.n(),
            z.n()
        )));
    }
    if let Some(y) = y {
        if y.len() != x.n() {
            return Err(Error::DimensionMismatch(format!(
                "response has {} rows, design has {}",
                y.len(),
                x.n()
            )));
        }
    }
    Ok(())
}

pub(crate) fn log_rates_unchecked<F: Real>(
    beta: &[F],
    u: &[F],
    x: &FixedDesign<F>,
    z: &RandomDesign,
) -> Vec<F> {
    (0..x.n())
        .map(|i| {
            let row = x.row(i);
            let mut eta = F::zero();
            for (xv, b) in row.iter().zip(beta) {
                eta += *xv * *b;
            }
            eta + u[z.cluster_of(i)]
        })
        .collect()
}

/// Row rates `lambda = exp(X beta + Z u)`.
pub fn rates<F: Real>(
    beta: &[F],
    u: &[F],
    x: &FixedDesign<F>,
    z: &RandomDesign,
) -> Result<Vec<F>> {
    check_dims(beta, u, x, z, None)?;
    Ok(log_rates_unchecked(beta, u, x, z)
        .into_iter()
        .map(|eta| eta.exp())
        .collect())
}

fn validate_h_inputs<F: Real>(
    beta: &[F],
    u: &[F],
    sigma2: F,
    x: &FixedDesign<F>,
    z: &RandomDesign,
    y: &[u32],
    bound: TruncationBound,
) -> Result<()> {
    check_dims(beta, u, x, z, Some(y))?;
    if !(sigma2 > F::zero()) || !sigma2.is_finite() {
        return Err(Error::Domain(format!(
            "sigma2 must be positive and finite, got {sigma2}"
        )));
    }
    if let Some(&bad) = y.iter().find(|&&v| v > bound.value()) {
        return Err(Error::Validation(format!(
            "response {bad} exceeds the truncation bound {}",
            bound.value()
        )));
    }
    Ok(())
}

/// The joint objective `h`.
pub fn h_likelihood<F: Real>(
    beta: &[F],
    u: &[F],
    sigma2: F,
    x: &FixedDesign<F>,
    z: &RandomDesign,
    y: &[u32],
    bound: TruncationBound,
) -> Result<F> {
    validate_h_inputs(beta, u, sigma2, x, z, y, bound)?;
    let lnfact = ln_factorials::<F>(bound.value());
    let etas = log_rates_unchecked(beta, u, x, z);
    Ok(cond_loglik_from_etas(&etas, y, bound.value(), &lnfact)
        + random_effect_loglik(u, sigma2))
}

/// `L1`: the conditional data log-likelihood at the given log-rates.
pub(crate) fn cond_loglik_from_etas<F: Real>(
    etas: &[F],
    y: &[u32],
    r: u32,
    lnfact: &[F],
) -> F {
    etas.iter()
        .zip(y)
        .map(|(&eta, &yi)| {
            let m = moments_with_table(eta, r, lnfact);
            real_of_usize::<F>(yi as usize) * eta - lnfact[yi as usize] - m.log_norm
        })
        .fold(F::zero(), |acc, t| acc + t)
}

/// `L2`: the normal log-density of the cluster effects.
pub(crate) fn random_effect_loglik<F: Real>(u: &[F], sigma2: F) -> F {
    let half = real::<F>(0.5);
    let ln_two_pi = real::<F>(std::f64::consts::TAU.ln());
    u.iter()
        .map(|&ui| -(half * ln_two_pi + half * sigma2.ln() + ui * ui / (real::<F>(2.0) * sigma2)))
        .fold(F::zero(), |acc, t| acc + t)
}

/// `dh/dbeta`: residuals against row truncated means, weighted by the
/// design columns.
pub fn score_beta<F: Real>(
    beta: &[F],
    u: &[F],
    x: &FixedDesign<F>,
    z: &RandomDesign,
    y: &[u32],
    bound: TruncationBound,
) -> Result<Vec<F>> {
    check_dims(beta, u, x, z, Some(y))?;
    let lnfact = ln_factorials::<F>(bound.value());
    let etas = log_rates_unchecked(beta, u, x, z);
    let mut g = vec![F::zero(); x.p()];
    for i in 0..x.n() {
        let mu = moments_with_table(etas[i], bound.value(), &lnfact).mean;
        let resid = real_of_usize::<F>(y[i] as usize) - mu;
        for (gl, &xv) in g.iter_mut().zip(x.row(i)) {
            *gl += resid * xv;
        }
    }
    Ok(g)
}

/// `dh/du`: per-cluster residual sums shrunk by the normal penalty.
pub fn score_u<F: Real>(
    beta: &[F],
    u: &[F],
    sigma2: F,
    x: &FixedDesign<F>,
    z: &RandomDesign,
    y: &[u32],
    bound: TruncationBound,
) -> Result<Vec<F>> {
    validate_h_inputs(beta, u, sigma2, x, z, y, bound)?;
    let lnfact = ln_factorials::<F>(bound.value());
    let etas = log_rates_unchecked(beta, u, x, z);
    let mut g = vec![F::zero(); z.q()];
    for i in 0..x.n() {
        let mu = moments_with_table(etas[i], bound.value(), &lnfact).mean;
        g[z.cluster_of(i)] += real_of_usize::<F>(y[i] as usize) - mu;
    }
    for (gi, &ui) in g.iter_mut().zip(u) {
        *gi = *gi - ui / sigma2;
    }
    Ok(g)
}

/// Draws cluster effects from `Normal(0, sigma2)` and then each response
/// from the row's truncated distribution; one RNG stream per seed.
pub fn simulate<F: Real>(
    beta: &[F],
    sigma2: F,
    x: &FixedDesign<F>,
    z: &RandomDesign,
    bound: TruncationBound,
    seed: u64,
) -> Result<Vec<u32>> {
    if sigma2 < F::zero() || !sigma2.is_finite() {
        return Err(Error::Domain(format!(
            "sigma2 must be non-negative and finite, got {sigma2}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sd = sigma2.to_f64().unwrap_or(0.0).sqrt();
    let u: Vec<F> = if sd > 0.0 {
        let normal = Normal::new(0.0, sd).expect("valid normal");
        (0..z.q()).map(|_| real(normal.sample(&mut rng))).collect()
    } else {
        vec![F::zero(); z.q()]
    };
    check_dims(beta, &u, x, z, None)?;
    let etas = log_rates_unchecked(beta, &u, x, z);
    Ok(etas
        .iter()
        .map(|&eta| {
            let cdf = cumulative_from_pmf(&pmf_table_from_log_lambda(eta, bound.value()));
            draw_from_cdf(&cdf, rng.random::<f64>())
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixed::design::{FixedDesign, RandomDesign};
    use approx::assert_relative_eq;

    fn intercept_design(n: usize) -> FixedDesign<f64> {
        FixedDesign::new(n, 1, vec![1.0; n], vec!["intercept".into()]).unwrap()
    }

    fn single_cluster(n: usize) -> RandomDesign {
        RandomDesign::new(vec![0; n], vec!["all".into()]).unwrap()
    }

    #[test]
    fn rates_hand_values() {
        let x = intercept_design(4);
        let z = single_cluster(4);
        let ones = rates(&[0.0], &[0.0], &x, &z).unwrap();
        assert!(ones.iter().all(|&l| l == 1.0));
        let twos = rates(&[2.0f64.ln()], &[0.0], &x, &z).unwrap();
        for l in twos {
            assert_relative_eq!(l, 2.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn rates_match_reported_coefficient_row() {
        // eta = 2.13408 + 0.00768*22 + 0.01012*7 = 2.37388
        let x = FixedDesign::new(
            3,
            3,
            vec![1.0, 22.0, 7.0, 1.0, 18.0, 6.0, 1.0, 25.0, 9.0],
            vec!["intercept".into(), "lines".into(), "words".into()],
        )
        .unwrap();
        let z = single_cluster(3);
        let lam = rates(&[2.13408f64, 0.00768, 0.01012], &[0.0], &x, &z).unwrap();
        assert!((lam[0] - 2.37388f64.exp()).abs() < 1e-9, "lambda = {}", lam[0]);
        assert!((lam[0] - 10.739).abs() < 1e-3, "lambda = {}", lam[0]);
    }

    #[test]
    fn rates_reject_dimension_mismatch() {
        let x = intercept_design(3);
        let z = single_cluster(3);
        assert!(rates(&[0.0, 1.0], &[0.0], &x, &z).is_err());
        assert!(rates(&[0.0], &[0.0, 0.0], &x, &z).is_err());
    }

    #[test]
    fn h_reduces_to_known_pieces() {
        // Single observation y = 0 with lambda = 1, r = 2: L1 = ln(0.4).
        // Keep the random part at u = 0 so L2 only contributes constants.
        let x = intercept_design(1);
        let z = single_cluster(1);
        let h = h_likelihood(&[0.0], &[0.0], 1.0, &x, &z, &[0], TruncationBound::new(2)).unwrap();
        let l2 = -0.5 * std::f64::consts::TAU.ln();
        assert_relative_eq!(h, 0.4f64.ln() + l2, max_relative = 1e-12);
    }

    #[test]
    fn l2_constant_at_zero_effects() {
        // u = 0, sigma2 = 1 over q clusters contributes -q*ln(2*pi)/2.
        for q in [1usize, 3, 10] {
            let u = vec![0.0; q];
            let got: f64 = random_effect_loglik(&u, 1.0);
            assert_relative_eq!(
                got,
                -(q as f64) * std::f64::consts::TAU.ln() / 2.0,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn h_rejects_bad_sigma2() {
        let x = intercept_design(1);
        let z = single_cluster(1);
        assert!(matches!(
            h_likelihood(&[0.0], &[0.0], 0.0, &x, &z, &[0], TruncationBound::new(2)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn h_concave_along_each_u_coordinate() {
        let x = intercept_design(6);
        let z = RandomDesign::new(vec![0, 0, 1, 1, 2, 2], vec!["a".into(), "b".into(), "c".into()])
            .unwrap();
        let y = [2, 3, 1, 0, 4, 2];
        let bound = TruncationBound::new(8);
        let beta = [1.0];
        let sigma2 = 0.5;

        // Find the coordinate-wise stationary point, then check h drops on
        // both sides.
        for i in 0..3 {
            let mut u = vec![0.1, -0.2, 0.05];
            let mut lo = -5.0;
            let mut hi = 5.0;
            for _ in 0..200 {
                u[i] = 0.5 * (lo + hi);
                let g = score_u(&beta, &u, sigma2, &x, &z, &y, bound).unwrap()[i];
                if g > 0.0 {
                    lo = u[i];
                } else {
                    hi = u[i];
                }
            }
            let at = |ui: f64, u: &[f64]| {
                let mut u = u.to_vec();
                u[i] = ui;
                h_likelihood(&beta, &u, sigma2, &x, &z, &y, bound).unwrap()
            };
            let star = u[i];
            let h_star = at(star, &u);
            for delta in [0.3, 1.0, 2.5] {
                assert!(at(star + delta, &u) < h_star);
                assert!(at(star - delta, &u) < h_star);
            }
        }
    }

    #[test]
    fn score_u_pinned_by_small_sigma2() {
        // As sigma2 -> 0+, the stationary u solving score_u = 0 collapses
        // to 0: the penalty term dominates.
        let x = intercept_design(4);
        let z = single_cluster(4);
        let y = [3, 2, 4, 1];
        let bound = TruncationBound::new(10);
        let mut prev = f64::INFINITY;
        for sigma2 in [1e-2, 1e-4, 1e-6] {
            let mut lo = -10.0;
            let mut hi = 10.0;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let g = score_u(&[1.0], &[mid], sigma2, &x, &z, &y, bound).unwrap()[0];
                if g > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let u_star = 0.5 * (lo + hi);
            assert!(u_star.abs() < prev);
            prev = u_star.abs();
        }
        assert!(prev < 1e-4);
    }

    #[test]
    fn simulate_degenerate_and_support() {
        let x = intercept_design(50);
        let z = single_cluster(50);
        let y = simulate(&[0.0], 0.0, &x, &z, TruncationBound::new(0), 5).unwrap();
        assert!(y.iter().all(|&v| v == 0));

        let y = simulate(&[2.0], 0.4, &x, &z, TruncationBound::new(12), 5).unwrap();
        assert!(y.iter().all(|&v| v <= 12));
        let again = simulate(&[2.0], 0.4, &x, &z, TruncationBound::new(12), 5).unwrap();
        assert_eq!(y, again);
    }
}
