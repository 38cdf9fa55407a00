//! Dense linear solve for the normal equations.

use crate::error::MlError;
use crate::Scalar;

/// Solve `A x = b` by Gaussian elimination with partial pivoting.
///
/// `a` is row-major n x n and is consumed. A pivot smaller than `1e-12`
/// (relative to the largest initial entry) reports a singular system.
pub fn solve<S: Scalar>(mut a: Vec<Vec<S>>, mut b: Vec<S>) -> Result<Vec<S>, MlError> {
    let n = b.len();
    debug_assert!(a.len() == n && a.iter().all(|r| r.len() == n));
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(S::zero(), |m, &v| m.max(v.abs()))
        .max(S::one());
    let tol = scale * S::from_f64_lossy(1e-12);

    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| {
                a[i][col]
                    .abs()
                    .partial_cmp(&a[j][col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap();
        if a[pivot_row][col].abs() < tol {
            return Err(MlError::SingularSystem);
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        let pivot = a[col][col];
        for row in col + 1..n {
            let factor = a[row][col] / pivot;
            if factor == S::zero() {
                continue;
            }
            for k in col..n {
                let upper = a[col][k];
                a[row][k] = a[row][k] - factor * upper;
            }
            b[row] = b[row] - factor * b[col];
        }
    }

    let mut x = vec![S::zero(); n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc = acc - a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Ok(x)
}
