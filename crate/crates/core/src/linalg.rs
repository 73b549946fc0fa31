//! Small dense helpers on row-major square matrices.

use crate::Scalar;

/// Lower Cholesky factor of a symmetric positive definite `n x n` matrix.
/// Returns `None` when a pivot is not strictly positive.
pub(crate) fn cholesky<T: Scalar>(a: &[T], n: usize) -> Option<Vec<T>> {
    debug_assert_eq!(a.len(), n * n);
    let mut l = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(sum > T::zero()) || !sum.is_finite() {
                    return None;
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Squared norm of `L^{-1} v` via forward substitution; `scratch` has length n.
pub(crate) fn forward_solve_sq_norm<T: Scalar>(l: &[T], n: usize, v: &[T], scratch: &mut [T]) -> T {
    let mut acc = T::zero();
    for i in 0..n {
        let row = &l[i * n..i * n + i];
        let mut s = v[i];
        for (lk, yk) in row.iter().zip(&scratch[..i]) {
            s -= *lk * *yk;
        }
        let y = s / l[i * n + i];
        scratch[i] = y;
        acc += y * y;
    }
    acc
}

/// log det of `L L^T` given the factor `L`.
pub(crate) fn chol_log_det<T: Scalar>(l: &[T], n: usize) -> T {
    (0..n).map(|i| l[i * n + i].ln()).sum::<T>() * T::of(2.0)
}

/// Orthonormalizes the columns of a square matrix (modified Gram–Schmidt),
/// flipping signs so the implied R has a positive diagonal. A Gaussian input
/// yields a Haar-distributed orthogonal matrix.
pub(crate) fn orthonormalize_columns(m: &mut [f64], n: usize) {
    for j in 0..n {
        for p in 0..j {
            let dot: f64 = (0..n).map(|i| m[i * n + j] * m[i * n + p]).sum();
            for i in 0..n {
                m[i * n + j] -= dot * m[i * n + p];
            }
        }
        let norm = (0..n).map(|i| m[i * n + j] * m[i * n + j]).sum::<f64>().sqrt();
        for i in 0..n {
            m[i * n + j] /= norm;
        }
    }
}
