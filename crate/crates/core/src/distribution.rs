//! Right-truncated Poisson distribution: evaluation, estimation, simulation.
//!
//! A count `X` right-truncated at `r` has support `{0, 1, ..., r}` and pmf
//! `P(X = x) = (lambda^x / x!) / sum_{j=0}^{r} lambda^j / j!`. All pmf and
//! likelihood arithmetic runs in log space so that large `lambda` and `r`
//! cannot overflow.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::real::{real, real_of_usize, Real};

/// Upper end of the support (pages available in a booklet, say).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TruncationBound(u32);

impl TruncationBound {
    pub fn new(r: u32) -> Self {
        TruncationBound(r)
    }

    pub fn value(self) -> u32 {
        self.0
    }
}

impl From<u32> for TruncationBound {
    fn from(r: u32) -> Self {
        TruncationBound(r)
    }
}

impl std::fmt::Display for TruncationBound {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Right-truncated Poisson with rate `lambda` and bound `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedPoissonModel<F> {
    lambda: F,
    bound: TruncationBound,
}

impl<F: Real> TruncatedPoissonModel<F> {
    /// Requires `lambda` finite and strictly positive.
    pub fn new(lambda: F, bound: TruncationBound) -> Result<Self> {
        if !lambda.is_finite() || lambda <= F::zero() {
            return Err(Error::InvalidModel(format!(
                "rate must be finite and positive, got {lambda}"
            )));
        }
        Ok(TruncatedPoissonModel { lambda, bound })
    }

    pub fn lambda(&self) -> F {
        self.lambda
    }

    pub fn bound(&self) -> TruncationBound {
        self.bound
    }

    /// `P(X = x)`; zero for `x` beyond the bound.
    pub fn pmf(&self, x: u32) -> F {
        if x > self.bound.value() {
            return F::zero();
        }
        self.log_pmf(x).map(|lp| lp.exp()).unwrap_or(F::zero())
    }

    /// `ln P(X = x)`. Errors for `x` outside the support.
    pub fn log_pmf(&self, x: u32) -> Result<F> {
        let r = self.bound.value();
        if x > r {
            return Err(Error::Domain(format!(
                "x = {x} outside the truncated support 0..={r}"
            )));
        }
        let lnfact = ln_factorials::<F>(r);
        let log_norm = log_normalizer(self.lambda.ln(), r, &lnfact);
        Ok(real_of_usize::<F>(x as usize) * self.lambda.ln() - lnfact[x as usize] - log_norm)
    }

    /// `P(X <= x)`, clamping below the support to 0 and above to 1.
    pub fn cdf(&self, x: i64) -> F {
        if x < 0 {
            return F::zero();
        }
        let r = self.bound.value();
        if x as u64 >= r as u64 {
            return F::one();
        }
        let table = self.pmf_table();
        let mut acc = F::zero();
        for &p in table.iter().take(x as usize + 1) {
            acc += p;
        }
        acc.min(F::one())
    }

    /// Expected value of the truncated count; strictly below `lambda`
    /// whenever the bound is finite.
    pub fn mean(&self) -> F {
        moments(self.lambda.ln(), self.bound.value()).mean
    }

    /// Variance of the truncated count.
    pub fn variance(&self) -> F {
        moments(self.lambda.ln(), self.bound.value()).var
    }

    fn pmf_table(&self) -> Vec<F> {
        pmf_table_from_log_lambda(self.lambda.ln(), self.bound.value())
    }

    /// `n` independent draws by inverse-CDF lookup; identical seeds give
    /// bit-identical samples.
    pub fn sample(&self, n: usize, seed: u64) -> CountSample {
        let cdf = cumulative_from_pmf(&self.pmf_table());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..n)
            .map(|_| draw_from_cdf(&cdf, rng.random::<f64>()))
            .collect();
        CountSample {
            values,
            bound: self.bound,
        }
    }
}

/// Observed counts together with the bound they were collected under.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountSample {
    values: Vec<u32>,
    bound: TruncationBound,
}

impl CountSample {
    /// Every value must be within the bound.
    pub fn new(values: Vec<u32>, bound: TruncationBound) -> Result<Self> {
        if let Some(&bad) = values.iter().find(|&&v| v > bound.value()) {
            return Err(Error::Validation(format!(
                "count {bad} exceeds the truncation bound {}",
                bound.value()
            )));
        }
        Ok(CountSample { values, bound })
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn bound(&self) -> TruncationBound {
        self.bound
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean<F: Real>(&self) -> F {
        if self.values.is_empty() {
            return F::zero();
        }
        let sum: u64 = self.values.iter().map(|&v| v as u64).sum();
        real::<F>(sum as f64) / real_of_usize(self.values.len())
    }
}

/// How a [`DistFit`] was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMethod {
    Mle,
    Moore,
}

/// A fitted rate with its uncertainty and convergence record. `std_error`
/// is absent at the boundary `lambda_hat = 0` and when the fit failed.
#[derive(Debug, Clone, PartialEq)]
pub struct DistFit<F> {
    pub lambda_hat: F,
    pub std_error: Option<F>,
    pub loglik: F,
    pub n: u32,
    pub converged: bool,
    pub iterations: u32,
    pub method: FitMethod,
    pub bound: TruncationBound,
}

/// Tolerances for [`fit_mle`]. `tol` bounds the absolute per-observation
/// score at the solution.
#[derive(Debug, Clone, Copy)]
pub struct FitOptions<F> {
    pub tol: F,
    pub max_iter: u32,
}

impl<F: Real> Default for FitOptions<F> {
    fn default() -> Self {
        FitOptions {
            tol: real(1e-10),
            max_iter: 200,
        }
    }
}

/// Sum of per-observation log pmfs at rate `lambda`.
pub fn log_likelihood<F: Real>(sample: &CountSample, lambda: F) -> Result<F> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if !lambda.is_finite() || lambda <= F::zero() {
        return Err(Error::InvalidModel(format!(
            "rate must be finite and positive, got {lambda}"
        )));
    }
    let r = sample.bound().value();
    let lnfact = ln_factorials::<F>(r);
    let log_norm = log_normalizer(lambda.ln(), r, &lnfact);
    let n = real_of_usize::<F>(sample.len());
    let sum: u64 = sample.values().iter().map(|&v| v as u64).sum();
    let lnfact_sum: F = sample
        .values()
        .iter()
        .map(|&v| lnfact[v as usize])
        .fold(F::zero(), |acc, t| acc + t);
    Ok(real::<F>(sum as f64) * lambda.ln() - lnfact_sum - n * log_norm)
}

/// Score statistic `n * (xbar - mu(lambda))`, the likelihood derivative on
/// the log-rate scale; its root is the MLE.
pub fn score<F: Real>(lambda: F, sample: &CountSample) -> Result<F> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if !lambda.is_finite() || lambda <= F::zero() {
        return Err(Error::Domain(format!("rate must be positive, got {lambda}")));
    }
    let mu = moments(lambda.ln(), sample.bound().value()).mean;
    Ok(real_of_usize::<F>(sample.len()) * (sample.mean::<F>() - mu))
}

/// Maximum-likelihood fit of the truncated rate.
///
/// The root of the score is bracketed on `[eps, max(10 * xbar, r)]` (expanding
/// if needed) and then located by bisection-safeguarded Newton steps. An
/// all-zero sample sits on the boundary: `lambda_hat = 0` with no standard
/// error.
pub fn fit_mle<F: Real>(sample: &CountSample, opts: &FitOptions<F>) -> Result<DistFit<F>> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let r = sample.bound().value();
    let n = sample.len();
    let xbar: F = sample.mean();

    if xbar == F::zero() {
        return Ok(DistFit {
            lambda_hat: F::zero(),
            std_error: None,
            loglik: F::zero(),
            n: n as u32,
            converged: true,
            iterations: 0,
            method: FitMethod::Mle,
            bound: sample.bound(),
        });
    }

    if xbar >= real(r as f64) {
        // Every observation sits at the bound: mu(lambda) < r for all
        // finite lambda, so the score has no root and the likelihood
        // increases without limit.
        let lambda = (real::<F>(10.0) * xbar).max(real(r as f64)).max(F::one());
        let loglik = log_likelihood(sample, lambda)?;
        return Ok(DistFit {
            lambda_hat: lambda,
            std_error: None,
            loglik,
            n: n as u32,
            converged: false,
            iterations: 0,
            method: FitMethod::Mle,
            bound: sample.bound(),
        });
    }

    // Per-observation score xbar - mu(lambda): positive left of the root,
    // negative right of it (mu is strictly increasing in lambda).
    let f = |lam: F| xbar - moments(lam.ln(), r).mean;

    let mut lo = real::<F>(1e-12);
    let mut hi = (real::<F>(10.0) * xbar).max(real(r as f64)).max(real(1.0));
    let mut expansions = 0;
    while f(hi) > F::zero() {
        hi = hi * real(2.0);
        expansions += 1;
        if expansions > 64 {
            // xbar is at (or numerically at) the bound r: the likelihood
            // increases without limit and no finite root exists.
            let loglik = log_likelihood(sample, hi)?;
            return Ok(DistFit {
                lambda_hat: hi,
                std_error: None,
                loglik,
                n: n as u32,
                converged: false,
                iterations: expansions,
                method: FitMethod::Mle,
                bound: sample.bound(),
            });
        }
    }

    let mut x = (lo + hi) * real(0.5);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        iterations += 1;
        let m = moments(x.ln(), r);
        let fx = xbar - m.mean;
        if fx.abs() <= opts.tol {
            converged = true;
            break;
        }
        if fx > F::zero() {
            lo = x;
        } else {
            hi = x;
        }
        // Newton step on f (f' = -mu'(lambda) = -var/lambda), kept inside
        // the bracket; bisect otherwise.
        let newton = if m.var > F::zero() {
            x + fx * x / m.var
        } else {
            F::nan()
        };
        x = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            (lo + hi) * real(0.5)
        };
    }

    let se = if converged { Some(std_error(x, sample.bound(), n as u32)) } else { None };
    let loglik = log_likelihood(sample, x)?;
    Ok(DistFit {
        lambda_hat: x,
        std_error: se,
        loglik,
        n: n as u32,
        converged,
        iterations,
        method: FitMethod::Mle,
        bound: sample.bound(),
    })
}

/// Standard error of the truncated MLE from per-observation observed
/// information `var(lambda) / lambda^2`, the negative score derivative at
/// stationarity. Requires `lambda > 0` and `n >= 1`.
pub fn std_error<F: Real>(lambda: F, bound: TruncationBound, n: u32) -> F {
    let var = moments(lambda.ln(), bound.value()).var;
    lambda / (real::<F>(n as f64) * var).sqrt()
}

/// Moment-style estimate `sum(values) / m`, with `m` the number of values
/// strictly below the bound. Unbiased for the truncated rate; undefined
/// when every value sits at the bound.
pub fn moore_estimate<F: Real>(sample: &CountSample) -> Result<F> {
    let r = sample.bound().value();
    let m = sample.values().iter().filter(|&&v| v < r).count();
    if m == 0 {
        return Err(Error::UndefinedEstimator(
            "no values below the truncation bound".into(),
        ));
    }
    let sum: u64 = sample.values().iter().map(|&v| v as u64).sum();
    Ok(real::<F>(sum as f64) / real_of_usize(m))
}

/// [`moore_estimate`] packaged as a [`DistFit`] (no standard error).
pub fn fit_moore<F: Real>(sample: &CountSample) -> Result<DistFit<F>> {
    let lambda_hat = moore_estimate::<F>(sample)?;
    let loglik = if lambda_hat > F::zero() {
        log_likelihood(sample, lambda_hat)?
    } else {
        F::zero()
    };
    Ok(DistFit {
        lambda_hat,
        std_error: None,
        loglik,
        n: sample.len() as u32,
        converged: true,
        iterations: 0,
        method: FitMethod::Moore,
        bound: sample.bound(),
    })
}

/// Untruncated Poisson reference fit (`lambda_hat = xbar`), for side-by-side
/// model comparison against the truncated fit.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonFit<F> {
    pub lambda_hat: F,
    pub std_error: Option<F>,
    pub loglik: F,
    pub n: u32,
}

pub fn fit_poisson_mle<F: Real>(sample: &CountSample) -> Result<PoissonFit<F>> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let n = sample.len();
    let xbar: F = sample.mean();
    let lnfact = ln_factorials::<F>(sample.bound().value());
    if xbar == F::zero() {
        return Ok(PoissonFit {
            lambda_hat: F::zero(),
            std_error: None,
            loglik: F::zero(),
            n: n as u32,
        });
    }
    let loglik = sample
        .values()
        .iter()
        .map(|&v| real_of_usize::<F>(v as usize) * xbar.ln() - xbar - lnfact[v as usize])
        .fold(F::zero(), |acc, t| acc + t);
    Ok(PoissonFit {
        lambda_hat: xbar,
        std_error: Some((xbar / real_of_usize(n)).sqrt()),
        loglik,
        n: n as u32,
    })
}

/// Log normalizer, mean, and variance of the truncated distribution,
/// parametrized by `ln(lambda)` so extreme rates stay representable.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TruncatedMoments<F> {
    pub log_norm: F,
    pub mean: F,
    pub var: F,
}

pub(crate) fn moments<F: Real>(log_lambda: F, r: u32) -> TruncatedMoments<F> {
    let lnfact = ln_factorials::<F>(r);
    moments_with_table(log_lambda, r, &lnfact)
}

/// As [`moments`] but reusing a precomputed log-factorial table (hot path
/// for the mixed-model fit, which evaluates one row at a time).
pub(crate) fn moments_with_table<F: Real>(
    log_lambda: F,
    r: u32,
    lnfact: &[F],
) -> TruncatedMoments<F> {
    debug_assert!(lnfact.len() > r as usize);
    let mut max_w = F::neg_infinity();
    let mut weights = Vec::with_capacity(r as usize + 1);
    for j in 0..=r {
        let w = real_of_usize::<F>(j as usize) * log_lambda - lnfact[j as usize];
        weights.push(w);
        if w > max_w {
            max_w = w;
        }
    }
    let mut z = F::zero();
    let mut m1 = F::zero();
    let mut m2 = F::zero();
    for (j, &w) in weights.iter().enumerate() {
        let e = (w - max_w).exp();
        let jf = real_of_usize::<F>(j);
        z += e;
        m1 += jf * e;
        m2 += jf * jf * e;
    }
    let mean = m1 / z;
    let var = (m2 / z - mean * mean).max(F::zero());
    TruncatedMoments {
        log_norm: max_w + z.ln(),
        mean,
        var,
    }
}

pub(crate) fn log_normalizer<F: Real>(log_lambda: F, r: u32, lnfact: &[F]) -> F {
    moments_with_table(log_lambda, r, lnfact).log_norm
}

/// `ln(0!), ln(1!), ..., ln(r!)` by running summation.
pub(crate) fn ln_factorials<F: Real>(up_to: u32) -> Vec<F> {
    let mut table = Vec::with_capacity(up_to as usize + 1);
    let mut acc = F::zero();
    table.push(acc);
    for k in 1..=up_to {
        acc += real::<F>(k as f64).ln();
        table.push(acc);
    }
    table
}

pub(crate) fn pmf_table_from_log_lambda<F: Real>(log_lambda: F, r: u32) -> Vec<F> {
    let lnfact = ln_factorials::<F>(r);
    let log_norm = log_normalizer(log_lambda, r, &lnfact);
    (0..=r)
        .map(|j| (real_of_usize::<F>(j as usize) * log_lambda - lnfact[j as usize] - log_norm).exp())
        .collect()
}

pub(crate) fn cumulative_from_pmf<F: Real>(pmf: &[F]) -> Vec<F> {
    let mut acc = F::zero();
    let mut cdf: Vec<F> = pmf
        .iter()
        .map(|&p| {
            acc += p;
            acc
        })
        .collect();
    if let Some(last) = cdf.last_mut() {
        *last = F::one();
    }
    cdf
}

/// Smallest `x` with `u < cdf[x]`.
pub(crate) fn draw_from_cdf<F: Real>(cdf: &[F], u: f64) -> u32 {
    let uf = real::<F>(u);
    let idx = cdf.partition_point(|&c| c <= uf);
    idx.min(cdf.len() - 1) as u32
}
