//! Tridiagonal and cyclic tridiagonal solvers.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("zero or non-finite pivot at row {0}")]
    Pivot(usize),
    #[error("dimension mismatch")]
    Dimension,
}

/// Solve `A x = rhs` for tridiagonal `A` by the Thomas algorithm.
///
/// `lower[i] = A[i+1][i]`, `diag[i] = A[i][i]`, `upper[i] = A[i][i+1]`.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let n = diag.len();
    if n == 0 || rhs.len() != n || lower.len() + 1 != n || upper.len() + 1 != n {
        return Err(LinalgError::Dimension);
    }
    let mut c = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut denom = diag[0];
    if !denom.is_finite() || denom == 0.0 {
        return Err(LinalgError::Pivot(0));
    }
    if n > 1 {
        c[0] = upper[0] / denom;
    }
    x[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - lower[i - 1] * c[i - 1];
        if !denom.is_finite() || denom == 0.0 {
            return Err(LinalgError::Pivot(i));
        }
        if i + 1 < n {
            c[i] = upper[i] / denom;
        }
        x[i] = (rhs[i] - lower[i - 1] * x[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    Ok(x)
}

/// Solve a cyclic tridiagonal system with Sherman–Morrison.
///
/// Row `i` reads `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]`
/// with indices taken modulo `n`; all three slices have length `n >= 3`.
pub fn solve_cyclic_tridiagonal(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &[f64],
) -> Result<Vec<f64>, LinalgError> {
    let n = diag.len();
    if n < 3 || lower.len() != n || upper.len() != n || rhs.len() != n {
        return Err(LinalgError::Dimension);
    }
    // A = B + w v^T with corner terms folded into B's first and last diagonal.
    let alpha = upper[n - 1]; // A[n-1][0]
    let beta = lower[0]; // A[0][n-1]
    let gamma = -diag[0];
    let mut b = diag.to_vec();
    b[0] -= gamma;
    b[n - 1] -= alpha * beta / gamma;
    let sub = &lower[1..];
    let sup = &upper[..n - 1];
    let x = solve_tridiagonal(sub, &b, sup, rhs)?;
    let mut w = vec![0.0; n];
    w[0] = gamma;
    w[n - 1] = alpha;
    let z = solve_tridiagonal(sub, &b, sup, &w)?;
    let fact = (x[0] + beta * x[n - 1] / gamma) / (1.0 + z[0] + beta * z[n - 1] / gamma);
    Ok(x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    // Dense Gaussian elimination with partial pivoting, used as the oracle.
    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
            a.swap(k, p);
            b.swap(k, p);
            for i in k + 1..n {
                let m = a[i][k] / a[k][k];
                let pivot_row = a[k].clone();
                for (aij, akj) in a[i][k..].iter_mut().zip(&pivot_row[k..]) {
                    *aij -= m * akj;
                }
                b[i] -= m * b[k];
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
            x[i] = (b[i] - s) / a[i][i];
        }
        x
    }

    proptest! {
        #[test]
        fn thomas_matches_dense(
            n in 2usize..20,
            seed in proptest::collection::vec(-1.0f64..1.0, 80),
        ) {
            let lower: Vec<f64> = seed[..n - 1].to_vec();
            let upper: Vec<f64> = seed[20..20 + n - 1].to_vec();
            let diag: Vec<f64> = (0..n).map(|i| 3.0 + seed[40 + i].abs()).collect();
            let rhs: Vec<f64> = seed[60..60 + n].to_vec();
            let mut a = vec![vec![0.0; n]; n];
            for i in 0..n {
                a[i][i] = diag[i];
                if i + 1 < n {
                    a[i + 1][i] = lower[i];
                    a[i][i + 1] = upper[i];
                }
            }
            let got = solve_tridiagonal(&lower, &diag, &upper, &rhs).unwrap();
            let want = dense_solve(a, rhs);
            for (g, w) in got.iter().zip(&want) {
                prop_assert!((g - w).abs() < 1e-12);
            }
        }

        #[test]
        fn cyclic_matches_dense(
            n in 3usize..20,
            seed in proptest::collection::vec(-1.0f64..1.0, 80),
        ) {
            let lower: Vec<f64> = seed[..n].to_vec();
            let upper: Vec<f64> = seed[20..20 + n].to_vec();
            let diag: Vec<f64> = (0..n).map(|i| 3.0 + seed[40 + i].abs()).collect();
            let rhs: Vec<f64> = seed[60..60 + n].to_vec();
            let mut a = vec![vec![0.0; n]; n];
            for i in 0..n {
                a[i][i] += diag[i];
                a[i][(i + n - 1) % n] += lower[i];
                a[i][(i + 1) % n] += upper[i];
            }
            let got = solve_cyclic_tridiagonal(&lower, &diag, &upper, &rhs).unwrap();
            let want = dense_solve(a, rhs);
            for (g, w) in got.iter().zip(&want) {
                prop_assert!((g - w).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert_eq!(
            solve_tridiagonal(&[1.0], &[1.0, 2.0, 3.0], &[1.0, 1.0], &[0.0; 3]),
            Err(LinalgError::Dimension)
        );
        assert_eq!(
            solve_cyclic_tridiagonal(&[1.0; 2], &[1.0; 2], &[1.0; 2], &[0.0; 2]),
            Err(LinalgError::Dimension)
        );
    }

    #[test]
    fn singular_pivot_is_reported() {
        let r = solve_tridiagonal(&[1.0], &[0.0, 1.0], &[1.0], &[1.0, 1.0]);
        assert_eq!(r, Err(LinalgError::Pivot(0)));
    }

    #[test]
    fn periodic_laplacian_shifted() {
        // (I - L) x = 1 with periodic L has solution x = 1.
        let n = 7;
        let x = solve_cyclic_tridiagonal(&[-1.0; 7], &[3.0; 7], &[-1.0; 7], &[1.0; 7]).unwrap();
        for v in x.iter().take(n) {
            assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-14);
        }
    }
}
