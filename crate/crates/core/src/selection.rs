//! Information criteria and model ranking.
//!
//! Lower is better for all three criteria. `aic = 2k - 2*loglik`,
//! `caic = aic + 2k(k+1)/(n-k-1)`, `bic = k*ln(n) - 2*loglik`.

use crate::error::{Error, Result};
use crate::real::{real, Real};

/// One fitted model's criteria, ready for ranking.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelScore<F> {
    pub label: String,
    pub loglik: F,
    pub k: u32,
    pub n: u32,
    pub aic: F,
    pub caic: F,
    pub bic: F,
}

impl<F: Real> ModelScore<F> {
    pub fn new(label: impl Into<String>, loglik: F, k: u32, n: u32) -> Result<Self> {
        if !loglik.is_finite() {
            return Err(Error::Validation(format!(
                "log-likelihood must be finite, got {loglik}"
            )));
        }
        let aic_v = aic(loglik, k);
        Ok(ModelScore {
            label: label.into(),
            loglik,
            k,
            n,
            aic: aic_v,
            caic: caic(aic_v, k, n)?,
            bic: bic(loglik, k, n),
        })
    }
}

pub fn aic<F: Real>(loglik: F, k: u32) -> F {
    real::<F>(2.0 * k as f64) - real::<F>(2.0) * loglik
}

/// Small-sample corrected AIC; requires `n > k + 1`.
pub fn caic<F: Real>(aic: F, k: u32, n: u32) -> Result<F> {
    if n <= k + 1 {
        return Err(Error::Domain(format!(
            "cAIC requires n > k + 1 (n = {n}, k = {k})"
        )));
    }
    let k = k as f64;
    let n = n as f64;
    Ok(aic + real(2.0 * k * (k + 1.0) / (n - k - 1.0)))
}

pub fn bic<F: Real>(loglik: F, k: u32, n: u32) -> F {
    real::<F>(k as f64) * real::<F>(n as f64).ln() - real::<F>(2.0) * loglik
}

/// Models ordered by AIC (ties by BIC, then label), plus the minimizer of
/// each criterion.
#[derive(Debug, Clone)]
pub struct Ranking<F> {
    pub ordered: Vec<ModelScore<F>>,
    pub best_aic: String,
    pub best_caic: String,
    pub best_bic: String,
}

pub fn rank<F: Real>(scores: &[ModelScore<F>]) -> Result<Ranking<F>> {
    if scores.is_empty() {
        return Err(Error::Validation("no models to rank".into()));
    }
    let mut ordered = scores.to_vec();
    ordered.sort_by(|a, b| {
        a.aic
            .partial_cmp(&b.aic)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(
                a.bic
                    .partial_cmp(&b.bic)
                    .unwrap_or(std::cmp::Ordering::Equal),
            )
            .then_with(|| a.label.cmp(&b.label))
    });
    let best = |key: fn(&ModelScore<F>) -> F| {
        ordered
            .iter()
            .min_by(|a, b| {
                key(a)
                    .partial_cmp(&key(b))
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then_with(|| a.label.cmp(&b.label))
            })
            .map(|m| m.label.clone())
            .unwrap_or_default()
    };
    Ok(Ranking {
        best_aic: best(|m| m.aic),
        best_caic: best(|m| m.caic),
        best_bic: best(|m| m.bic),
        ordered,
    })
}
