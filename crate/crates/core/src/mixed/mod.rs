//! Right-truncated Poisson regression with normal random cluster effects,
//! estimated by maximizing the hierarchical likelihood jointly over fixed
//! and random effects.

mod design;
mod fit;
mod hlik;

pub use design::{build_design, FixedDesign, RandomDesign, RegressionData};
pub use fit::{fit, fit_design, FitControl};
pub use hlik::{h_likelihood, rates, score_beta, score_u, simulate};

use crate::distribution::TruncationBound;
use crate::real::{real, Real};

/// What to fit: the truncation bound, which factor column defines the
/// clusters, and which numeric columns enter as covariates (an intercept is
/// always included).
#[derive(Debug, Clone)]
pub struct MixedModelSpec<F> {
    pub bound: TruncationBound,
    pub cluster_variable: String,
    pub covariate_names: Vec<String>,
    pub tol: F,
    pub max_iter: u32,
}

impl<F: Real> MixedModelSpec<F> {
    pub fn new(
        bound: TruncationBound,
        cluster_variable: impl Into<String>,
        covariate_names: Vec<String>,
    ) -> Self {
        MixedModelSpec {
            bound,
            cluster_variable: cluster_variable.into(),
            covariate_names,
            tol: real(1e-8),
            max_iter: 200,
        }
    }
}

/// A fitted mixed model. `cond_loglik` is the conditional data
/// log-likelihood `L1` at the optimum; information criteria use it with
/// `k = beta.len()` (fixed effects only).
#[derive(Debug, Clone)]
pub struct MixedFit<F> {
    pub coefficient_names: Vec<String>,
    pub beta: Vec<F>,
    pub beta_se: Vec<F>,
    pub cluster_names: Vec<String>,
    pub u: Vec<F>,
    pub sigma2: F,
    pub cond_loglik: F,
    pub h_value: F,
    pub t_values: Vec<F>,
    pub p_values: Vec<F>,
    pub aic: F,
    pub bic: F,
    pub converged: bool,
    pub iterations: u32,
    pub n: u32,
}

impl<F: Real> MixedFit<F> {
    /// Fixed-effect count used in the information criteria.
    pub fn k(&self) -> u32 {
        self.beta.len() as u32
    }

    pub fn summary(&self) -> RegressionSummary<F> {
        summary(self)
    }
}

/// One line of the coefficient table.
#[derive(Debug, Clone)]
pub struct CoefficientRow<F> {
    pub name: String,
    pub estimate: F,
    pub std_error: F,
    pub t_value: F,
    pub p_value: F,
}

/// Coefficient table plus the fit footer.
#[derive(Debug, Clone)]
pub struct RegressionSummary<F> {
    pub rows: Vec<CoefficientRow<F>>,
    pub loglik: F,
    pub aic: F,
    pub bic: F,
    pub sigma2: F,
    pub n: u32,
    pub converged: bool,
}

pub fn summary<F: Real>(fit: &MixedFit<F>) -> RegressionSummary<F> {
    let rows = fit
        .coefficient_names
        .iter()
        .enumerate()
        .map(|(i, name)| CoefficientRow {
            name: name.clone(),
            estimate: fit.beta[i],
            std_error: fit.beta_se[i],
            t_value: fit.t_values[i],
            p_value: fit.p_values[i],
        })
        .collect();
    RegressionSummary {
        rows,
        loglik: fit.cond_loglik,
        aic: fit.aic,
        bic: fit.bic,
        sigma2: fit.sigma2,
        n: fit.n,
        converged: fit.converged,
    }
}

impl<F: Real> std::fmt::Display for RegressionSummary<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "{:<18} {:>12} {:>12} {:>9} {:>9}",
            "coefficient", "estimate", "std_error", "t_value", "p_value"
        )?;
        for row in &self.rows {
            let p = row.p_value.to_f64().unwrap_or(f64::NAN);
            let p_str = if p < 1e-4 {
                "<0.0001".to_string()
            } else {
                format!("{p:.4}")
            };
            writeln!(
                f,
                "{:<18} {:>12.5} {:>12.5} {:>9.3} {:>9}",
                row.name,
                row.estimate.to_f64().unwrap_or(f64::NAN),
                row.std_error.to_f64().unwrap_or(f64::NAN),
                row.t_value.to_f64().unwrap_or(f64::NAN),
                p_str
            )?;
        }
        writeln!(
            f,
            "loglik = {:.4}, aic = {:.3}, bic = {:.3}, sigma2 = {:.6}, n = {}{}",
            self.loglik.to_f64().unwrap_or(f64::NAN),
            self.aic.to_f64().unwrap_or(f64::NAN),
            self.bic.to_f64().unwrap_or(f64::NAN),
            self.sigma2.to_f64().unwrap_or(f64::NAN),
            self.n,
            if self.converged { "" } else { " (not converged)" }
        )
    }
}
