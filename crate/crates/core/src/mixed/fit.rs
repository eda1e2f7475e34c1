//! Joint Newton-Raphson maximization of the hierarchical likelihood.
//!
//! Each Newton step solves the full `(p + q)` system through the Schur
//! complement on the diagonal cluster block, so per-row clusters (`q = n`)
//! stay cheap. Steps are halved until `h` does not decrease; the dispersion
//! update `sigma2 = sum(u_i^2) / q` is the stationary point of the random
//! part and alternates with the Newton stage.

use crate::distribution::{ln_factorials, moments_with_table, TruncationBound};
use crate::error::{Error, Result};
use crate::linalg::{chol_inverse, chol_solve, cholesky};
use crate::real::{real, real_of_usize, Real};
use crate::selection;
use crate::tails::normal_two_sided_p;

use super::design::{build_design, initial_intercept, FixedDesign, RandomDesign, RegressionData};
use super::hlik::{check_dims, cond_loglik_from_etas, log_rates_unchecked, random_effect_loglik};
use super::{MixedFit, MixedModelSpec};

const SIGMA2_FLOOR: f64 = 1e-8;
const RIDGE: f64 = 1e-8;
const MAX_HALVINGS: u32 = 30;

/// Knobs for [`fit_design`]. `fixed_sigma2` pins the dispersion instead of
/// estimating it (useful for degenerate single-cluster comparisons).
#[derive(Debug, Clone, Copy)]
pub struct FitControl<F> {
    pub tol: F,
    pub max_iter: u32,
    pub sigma2_init: F,
    pub fixed_sigma2: Option<F>,
}

impl<F: Real> Default for FitControl<F> {
    fn default() -> Self {
        FitControl {
            tol: real(1e-8),
            max_iter: 200,
            sigma2_init: real(0.1),
            fixed_sigma2: None,
        }
    }
}

/// Builds the designs from named columns and fits the mixed model.
pub fn fit<F: Real>(spec: &MixedModelSpec<F>, data: &RegressionData<F>) -> Result<MixedFit<F>> {
    let (x, z, y) = build_design(data, spec)?;
    let control = FitControl {
        tol: spec.tol,
        max_iter: spec.max_iter,
        ..FitControl::default()
    };
    fit_design(&x, &z, &y, spec.bound, &control)
}

/// Fits the model on explicit designs.
pub fn fit_design<F: Real>(
    x: &FixedDesign<F>,
    z: &RandomDesign,
    y: &[u32],
    bound: TruncationBound,
    control: &FitControl<F>,
) -> Result<MixedFit<F>> {
    let p = x.p();
    let q = z.q();
    let n = x.n();
    check_dims(&vec![F::zero(); p], &vec![F::zero(); q], x, z, Some(y))?;
    if let Some(&bad) = y.iter().find(|&&v| v > bound.value()) {
        return Err(Error::Validation(format!(
            "response {bad} exceeds the truncation bound {}",
            bound.value()
        )));
    }
    let r = bound.value();
    let lnfact = ln_factorials::<F>(r);
    let floor = real::<F>(SIGMA2_FLOOR);

    let mut beta = vec![F::zero(); p];
    beta[0] = initial_intercept(y);
    let mut u = vec![F::zero(); q];
    let mut sigma2 = control
        .fixed_sigma2
        .unwrap_or(control.sigma2_init)
        .max(floor);
    let mut floored = false;

    let eval_h = |beta: &[F], u: &[F], sigma2: F| -> F {
        let etas = log_rates_unchecked(beta, u, x, z);
        cond_loglik_from_etas(&etas, y, r, &lnfact) + random_effect_loglik(u, sigma2)
    };

    let mut h_cur = eval_h(&beta, &u, sigma2);
    let mut iterations = 0u32;
    let mut converged = false;

    'outer: for _round in 0..control.max_iter {
        // Newton stage at the current sigma2.
        let mut grad_small = false;
        loop {
            let state = RowState::compute(&beta, &u, x, z, r, &lnfact);
            let (g_beta, g_u) = state.gradients(&u, sigma2, x, z, y);
            let gmax = g_beta
                .iter()
                .chain(g_u.iter())
                .fold(F::zero(), |m, &g| m.max(g.abs()));
            if gmax <= control.tol {
                grad_small = true;
                break;
            }
            if iterations >= control.max_iter {
                break 'outer;
            }
            let blocks = state.blocks(sigma2, x, z);
            let (delta_beta, delta_u) = blocks.solve(&g_beta, &g_u, x)?;

            // Step halving: never accept a decrease in h.
            let mut step = F::one();
            let mut accepted = false;
            for _ in 0..=MAX_HALVINGS {
                let cand_beta: Vec<F> = beta
                    .iter()
                    .zip(&delta_beta)
                    .map(|(&b, &d)| b + step * d)
                    .collect();
                let cand_u: Vec<F> = u
                    .iter()
                    .zip(&delta_u)
                    .map(|(&v, &d)| v + step * d)
                    .collect();
                let h_new = eval_h(&cand_beta, &cand_u, sigma2);
                if h_new.is_finite() && h_new >= h_cur {
                    beta = cand_beta;
                    u = cand_u;
                    h_cur = h_new;
                    accepted = true;
                    break;
                }
                step = step * real(0.5);
            }
            iterations += 1;
            if !accepted {
                // No uphill step left at this scale; treat as stalled.
                break;
            }
        }

        if control.fixed_sigma2.is_some() {
            converged = grad_small;
            break;
        }

        // Dispersion stage: stationary update of the random part.
        let sum_sq = u.iter().map(|&v| v * v).fold(F::zero(), |a, t| a + t);
        let mut s2_new = sum_sq / real_of_usize(q);
        if s2_new < floor {
            s2_new = floor;
            floored = true;
        } else {
            floored = false;
        }
        let s2_change = (s2_new - sigma2).abs();
        sigma2 = s2_new;
        h_cur = eval_h(&beta, &u, sigma2);
        if grad_small && s2_change <= control.tol * F::one().max(sigma2) {
            converged = true;
            break;
        }
    }

    // Standard errors from the beta block of the inverse negative Hessian
    // (the inverse Schur complement).
    let state = RowState::compute(&beta, &u, x, z, r, &lnfact);
    let schur = state.blocks(sigma2, x, z).schur();
    let l = factor_with_ridge(&schur, p, x)?;
    let cov = chol_inverse(&l, p);
    let beta_se: Vec<F> = (0..p)
        .map(|i| cov[i * p + i].max(F::zero()).sqrt())
        .collect();

    let t_values: Vec<F> = beta
        .iter()
        .zip(&beta_se)
        .map(|(&b, &se)| if se > F::zero() { b / se } else { F::zero() })
        .collect();
    let p_values: Vec<F> = t_values.iter().map(|&t| normal_two_sided_p(t)).collect();

    let etas = log_rates_unchecked(&beta, &u, x, z);
    let cond_loglik = cond_loglik_from_etas(&etas, y, r, &lnfact);
    let h_value = cond_loglik + random_effect_loglik(&u, sigma2);
    let k = p as u32;
    let aic = selection::aic(cond_loglik, k);
    let bic = selection::bic(cond_loglik, k, n as u32);

    Ok(MixedFit {
        coefficient_names: x.labels().to_vec(),
        beta,
        beta_se,
        cluster_names: z.labels().to_vec(),
        u,
        sigma2: if floored { F::zero() } else { sigma2 },
        cond_loglik,
        h_value,
        t_values,
        p_values,
        aic,
        bic,
        converged,
        iterations,
        n: n as u32,
    })
}

/// Per-row truncated means and variances at the current parameters.
struct RowState<F> {
    mu: Vec<F>,
    var: Vec<F>,
}

impl<F: Real> RowState<F> {
    fn compute(
        beta: &[F],
        u: &[F],
        x: &FixedDesign<F>,
        z: &RandomDesign,
        r: u32,
        lnfact: &[F],
    ) -> Self {
        let etas = log_rates_unchecked(beta, u, x, z);
        let mut mu = Vec::with_capacity(etas.len());
        let mut var = Vec::with_capacity(etas.len());
        for &eta in &etas {
            let m = moments_with_table(eta, r, lnfact);
            mu.push(m.mean);
            var.push(m.var);
        }
        RowState { mu, var }
    }

    fn gradients(
        &self,
        u: &[F],
        sigma2: F,
        x: &FixedDesign<F>,
        z: &RandomDesign,
        y: &[u32],
    ) -> (Vec<F>, Vec<F>) {
        let p = x.p();
        let mut g_beta = vec![F::zero(); p];
        let mut g_u = vec![F::zero(); z.q()];
        for i in 0..x.n() {
            let resid = real_of_usize::<F>(y[i] as usize) - self.mu[i];
            for (gl, &xv) in g_beta.iter_mut().zip(x.row(i)) {
                *gl += resid * xv;
            }
            g_u[z.cluster_of(i)] += resid;
        }
        for (gi, &ui) in g_u.iter_mut().zip(u) {
            *gi = *gi - ui / sigma2;
        }
        (g_beta, g_u)
    }

    /// Negative-Hessian blocks: `B = X'VX`, per-cluster columns
    /// `c_i = X'V z_i`, and diagonals `d_i = sum_i(v) + 1/sigma2`.
    fn blocks(&self, sigma2: F, x: &FixedDesign<F>, z: &RandomDesign) -> Blocks<F> {
        let p = x.p();
        let q = z.q();
        let mut b = vec![F::zero(); p * p];
        let mut c = vec![F::zero(); q * p];
        let mut d = vec![F::one() / sigma2; q];
        for i in 0..x.n() {
            let v = self.var[i];
            let row = x.row(i);
            let cl = z.cluster_of(i);
            for a in 0..p {
                let va = v * row[a];
                for bcol in 0..p {
                    b[a * p + bcol] += va * row[bcol];
                }
                c[cl * p + a] += va;
            }
            d[cl] += v;
        }
        Blocks { b, c, d, p, q }
    }
}

struct Blocks<F> {
    b: Vec<F>,
    c: Vec<F>,
    d: Vec<F>,
    p: usize,
    q: usize,
}

impl<F: Real> Blocks<F> {
    /// `S = B - sum_i c_i c_i' / d_i`, the beta block after eliminating u.
    fn schur(&self) -> Vec<F> {
        let p = self.p;
        let mut s = self.b.clone();
        for i in 0..self.q {
            let ci = &self.c[i * p..(i + 1) * p];
            let inv_d = F::one() / self.d[i];
            for a in 0..p {
                for bcol in 0..p {
                    s[a * p + bcol] = s[a * p + bcol] - ci[a] * ci[bcol] * inv_d;
                }
            }
        }
        s
    }

    fn solve(&self, g_beta: &[F], g_u: &[F], x: &FixedDesign<F>) -> Result<(Vec<F>, Vec<F>)> {
        let p = self.p;
        let s = self.schur();
        let mut rhs = g_beta.to_vec();
        for i in 0..self.q {
            let ci = &self.c[i * p..(i + 1) * p];
            let scale = g_u[i] / self.d[i];
            for a in 0..p {
                rhs[a] = rhs[a] - ci[a] * scale;
            }
        }
        let l = factor_with_ridge(&s, p, x)?;
        let delta_beta = chol_solve(&l, p, &rhs);
        let delta_u: Vec<F> = (0..self.q)
            .map(|i| {
                let ci = &self.c[i * p..(i + 1) * p];
                let dot = ci
                    .iter()
                    .zip(&delta_beta)
                    .map(|(&cv, &dv)| cv * dv)
                    .fold(F::zero(), |a, t| a + t);
                (g_u[i] - dot) / self.d[i]
            })
            .collect();
        Ok((delta_beta, delta_u))
    }
}

/// Cholesky with one ridge retry; the second failure is an error naming the
/// offending coefficient direction.
fn factor_with_ridge<F: Real>(a: &[F], n: usize, x: &FixedDesign<F>) -> Result<Vec<F>> {
    match cholesky(a, n) {
        Ok(l) => Ok(l),
        Err(_) => {
            let mut ridged = a.to_vec();
            for i in 0..n {
                ridged[i * n + i] += real(RIDGE);
            }
            cholesky(&ridged, n).map_err(|k| {
                Error::Singular(format!(
                    "hessian is singular in the direction of coefficient '{}'",
                    x.labels()[k]
                ))
            })
        }
    }
}
