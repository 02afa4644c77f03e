//! Small dense linear algebra on row-major `Vec<Vec<R>>` matrices.
//!
//! Dimensions here are the decision-space dimension (tens at most), so plain
//! O(d³) routines are used throughout.

use crate::error::{Error, Result};
use crate::scalar::Real;

pub type Matrix<R> = Vec<Vec<R>>;

pub fn identity<R: Real>(n: usize) -> Matrix<R> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { R::one() } else { R::zero() }).collect())
        .collect()
}

pub fn mat_vec<R: Real>(a: &Matrix<R>, x: &[R]) -> Vec<R> {
    a.iter()
        .map(|row| row.iter().zip(x).map(|(&a, &b)| a * b).sum())
        .collect()
}

pub fn dot<R: Real>(a: &[R], b: &[R]) -> R {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn norm<R: Real>(a: &[R]) -> R {
    dot(a, a).sqrt()
}

pub fn is_symmetric<R: Real>(a: &Matrix<R>, tol: R) -> bool {
    let n = a.len();
    (0..n).all(|i| a[i].len() == n && (0..i).all(|j| (a[i][j] - a[j][i]).abs() <= tol))
}

/// Cholesky factor `L` with `A = L Lᵀ`; fails unless `A` is symmetric positive definite.
pub fn cholesky<R: Real>(a: &Matrix<R>) -> Result<Matrix<R>> {
    let n = a.len();
    if !is_symmetric(a, R::of(1e-12)) {
        return Err(Error::Domain("matrix is not symmetric".into()));
    }
    let mut l = vec![vec![R::zero(); n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: R = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = a[i][i] - s;
                if !(d > R::zero()) {
                    return Err(Error::Domain("matrix is not positive definite".into()));
                }
                l[i][j] = d.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    Ok(l)
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
pub fn solve<R: Real>(a: &Matrix<R>, b: &[R]) -> Result<Vec<R>> {
    let n = a.len();
    Error::check_dim(n, b.len())?;
    let mut m: Matrix<R> = a
        .iter()
        .zip(b)
        .map(|(row, &bi)| {
            let mut r = row.clone();
            r.push(bi);
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| {
                m[i][col]
                    .abs()
                    .partial_cmp(&m[j][col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(col);
        if !(m[pivot][col].abs() > R::epsilon()) {
            return Err(Error::Numeric("singular linear system".into()));
        }
        m.swap(col, pivot);
        for row in col + 1..n {
            let factor = m[row][col] / m[col][col];
            for k in col..=n {
                let v = m[col][k];
                m[row][k] = m[row][k] - factor * v;
            }
        }
    }
    let mut x = vec![R::zero(); n];
    for i in (0..n).rev() {
        let s: R = (i + 1..n).map(|k| m[i][k] * x[k]).sum();
        x[i] = (m[i][n] - s) / m[i][i];
    }
    Ok(x)
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns `(eigenvalues, eigenvectors)` where column `k` of the second
/// matrix is the eigenvector for `eigenvalues[k]`.
pub fn symmetric_eigen<R: Real>(a: &Matrix<R>) -> (Vec<R>, Matrix<R>) {
    let n = a.len();
    let mut m = a.clone();
    let mut v = identity::<R>(n);
    for _sweep in 0..100 {
        let off: R = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        let scale: R = (0..n).map(|i| m[i][i] * m[i][i]).sum();
        if off <= R::epsilon() * R::epsilon() * scale.max(R::min_positive_value()) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q] == R::zero() {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (R::of(2.0) * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + R::one()).sqrt());
                let c = R::one() / (t * t + R::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| m[i][i]).collect(), v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn solve_matches_known_solution() {
        let a = vec![
            vec![0.0, 2.0, 1.0],
            vec![1.0, -1.0, 0.0],
            vec![3.0, 0.0, 2.0],
        ];
        let x = [1.0, -2.0, 0.5];
        let b = mat_vec(&a, &x);
        let got = solve(&a, &b).unwrap();
        for (g, e) in got.iter().zip(&x) {
            assert_relative_eq!(*g, *e, epsilon = 1e-12);
        }
        let singular = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(solve(&singular, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        assert!(cholesky(&vec![vec![2.0, 0.5], vec![0.5, 1.0]]).is_ok());
        assert!(cholesky(&vec![vec![1.0, 2.0], vec![2.0, 1.0]]).is_err());
        assert!(cholesky(&vec![vec![1.0, 0.1], vec![0.0, 1.0]]).is_err());
    }

    #[test]
    fn eigen_reconstructs_matrix() {
        let a = vec![
            vec![4.0, 1.0, -2.0, 0.5],
            vec![1.0, 3.0, 0.0, 0.2],
            vec![-2.0, 0.0, 5.0, 1.0],
            vec![0.5, 0.2, 1.0, 2.0],
        ];
        let (vals, vecs) = symmetric_eigen(&a);
        for i in 0..4 {
            for j in 0..4 {
                let r: f64 = (0..4).map(|k| vecs[i][k] * vals[k] * vecs[j][k]).sum();
                assert_relative_eq!(r, a[i][j], epsilon = 1e-10);
                let o: f64 = (0..4).map(|k| vecs[k][i] * vecs[k][j]).sum();
                assert_relative_eq!(o, if i == j { 1.0 } else { 0.0 }, epsilon = 1e-10);
            }
        }
        let trace: f64 = vals.iter().sum();
        assert_relative_eq!(trace, 14.0, epsilon = 1e-10);
    }
}
