//! Small dense symmetric-matrix helpers (Cholesky based). Matrices are
//! row-major flat slices; everything here is sized for the single-digit
//! dimensions this crate needs.

use crate::real::Real;

/// Lower-triangular Cholesky factor of a symmetric positive-definite
/// matrix. `Err(k)` reports the first pivot that failed.
pub(crate) fn cholesky<F: Real>(a: &[F], n: usize) -> Result<Vec<F>, usize> {
    debug_assert_eq!(a.len(), n * n);
    let mut l = vec![F::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum = sum - l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(sum > F::zero()) || !sum.is_finite() {
                    return Err(i);
                }
                l[i * n + j] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Ok(l)
}

/// Solves `A x = b` given the Cholesky factor `L` of `A`.
pub(crate) fn chol_solve<F: Real>(l: &[F], n: usize, b: &[F]) -> Vec<F> {
    let mut y = vec![F::zero(); n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum = sum - l[i * n + k] * y[k];
        }
        y[i] = sum / l[i * n + i];
    }
    let mut x = vec![F::zero(); n];
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in (i + 1)..n {
            sum = sum - l[k * n + i] * x[k];
        }
        x[i] = sum / l[i * n + i];
    }
    x
}

/// Full inverse from the Cholesky factor.
pub(crate) fn chol_inverse<F: Real>(l: &[F], n: usize) -> Vec<F> {
    let mut inv = vec![F::zero(); n * n];
    for col in 0..n {
        let mut e = vec![F::zero(); n];
        e[col] = F::one();
        let x = chol_solve(l, n, &e);
        for row in 0..n {
            inv[row * n + col] = x[row];
        }
    }
    inv
}

/// `ln det(A)` from the Cholesky factor of `A`.
pub(crate) fn chol_log_det<F: Real>(l: &[F], n: usize) -> F {
    let mut acc = F::zero();
    for i in 0..n {
        acc += l[i * n + i].ln();
    }
    acc + acc
}
