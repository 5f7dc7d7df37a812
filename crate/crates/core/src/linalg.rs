//! Small dense linear solves used for extrapolation weights and
//! finite-difference stencil weights. Systems here are at most ~17x17, so
//! Gaussian elimination with partial pivoting is all that is needed.

use crate::error::{Error, Result};
use crate::Scalar;

/// Solve `A x = b` by Gaussian elimination with partial pivoting.
/// `a` is row-major and consumed.
pub fn solve_dense<S: Scalar>(mut a: Vec<Vec<S>>, mut b: Vec<S>) -> Result<Vec<S>> {
    let n = b.len();
    assert!(a.len() == n && a.iter().all(|r| r.len() == n));
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| {
                a[i][col]
                    .abs()
                    .partial_cmp(&a[j][col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap();
        if a[pivot][col].abs() == S::zero() {
            return Err(Error::SingularSystem);
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor == S::zero() {
                continue;
            }
            for k in col..n {
                let upd = a[col][k];
                a[row][k] = a[row][k] - factor * upd;
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

/// Weights `w_j` such that `sum_j w_j f(x + j*s)` approximates the
/// `deriv`-th derivative times `s^deriv`, for the given integer offsets.
/// Computed from the moment system `sum_j w_j j^m = deriv! * delta(m, deriv)`
/// for `m = 0..offsets.len()`.
pub fn fd_weights<S: Scalar>(offsets: &[i64], deriv: usize) -> Result<Vec<S>> {
    let n = offsets.len();
    assert!(deriv < n, "need more points than the derivative order");
    let mut a = vec![vec![S::zero(); n]; n];
    for (j, &off) in offsets.iter().enumerate() {
        let o = S::from_f64_c(off as f64);
        let mut pow = S::one();
        for row in a.iter_mut().take(n) {
            row[j] = pow;
            pow = pow * o;
        }
    }
    let mut b = vec![S::zero(); n];
    let factorial: f64 = (1..=deriv).map(|k| k as f64).product();
    b[deriv] = S::from_f64_c(factorial.max(1.0));
    solve_dense(a, b)
}

/// Symmetric centered offsets giving at least 4th-order accuracy for the
/// `deriv`-th derivative.
pub fn centered_offsets(deriv: usize) -> Vec<i64> {
    let r = (deriv / 2 + 2) as i64;
    (-r..=r).collect()
}
