//! Reference-distribution tail probabilities, bridged through `f64`
//! (statistical p-values gain nothing from wider scalar types).

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::real::{real, Real};

/// Two-sided standard-normal p-value of a t-like statistic.
pub(crate) fn normal_two_sided_p<F: Real>(t: F) -> F {
    let t = t.to_f64().unwrap_or(f64::NAN);
    if !t.is_finite() {
        return F::zero();
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    real(2.0 * (1.0 - normal.cdf(t.abs())))
}

/// Upper-tail chi-square probability `P(X > x)` with `df` degrees of freedom.
pub(crate) fn chi_square_upper<F: Real>(x: F, df: u32) -> F {
    let x = x.to_f64().unwrap_or(f64::NAN);
    if !x.is_finite() || x <= 0.0 {
        return F::one();
    }
    let chi = ChiSquared::new(df as f64).expect("positive df");
    real((1.0 - chi.cdf(x)).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_sided_p_reference_points() {
        let p: f64 = normal_two_sided_p(1.959963984540054);
        assert!((p - 0.05).abs() < 1e-9);
        assert_eq!(normal_two_sided_p::<f64>(0.0), 1.0);
        let p: f64 = normal_two_sided_p(-1.959963984540054);
        assert!((p - 0.05).abs() < 1e-9);
    }

    #[test]
    fn chi_square_reference_points() {
        // P(chi2_1 > 3.841459) = 0.05
        let p: f64 = chi_square_upper(3.8414588206941254, 1);
        assert!((p - 0.05).abs() < 1e-9);
        assert_eq!(chi_square_upper::<f64>(0.0, 4), 1.0);
    }
}
