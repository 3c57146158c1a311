//! Symmetric tridiagonal eigensolver (implicit QL with Wilkinson shifts).

use crate::error::{Error, Result};
use crate::scalar::Real;

const MAX_SWEEPS: usize = 60;

/// Eigenpairs of a real symmetric tridiagonal matrix, sorted by decreasing eigenvalue.
#[derive(Debug, Clone)]
pub struct TridiagonalEigen<T> {
    pub values: Vec<T>,
    /// Column-major `n x n`; column `k` is the eigenvector of `values[k]`.
    vectors: Vec<T>,
    n: usize,
}

impl<T: Real> TridiagonalEigen<T> {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn vector(&self, k: usize) -> &[T] {
        &self.vectors[k * self.n..(k + 1) * self.n]
    }
}

/// Diagonalizes the symmetric tridiagonal matrix with main diagonal `diag`
/// and sub-diagonal `offdiag` (`offdiag[i]` couples rows `i` and `i + 1`).
pub fn symmetric_tridiagonal_eigen<T: Real>(diag: &[T], offdiag: &[T]) -> Result<TridiagonalEigen<T>> {
    let n = diag.len();
    if n == 0 {
        return Err(Error::Domain("empty tridiagonal matrix".into()));
    }
    if offdiag.len() + 1 != n {
        return Err(Error::Domain(format!(
            "off-diagonal has length {}, expected {}",
            offdiag.len(),
            n - 1
        )));
    }
    let mut d = diag.to_vec();
    // e[i] couples i and i+1; e[n-1] is scratch.
    let mut e = offdiag.to_vec();
    e.push(T::zero());
    let mut z = vec![T::zero(); n * n];
    for k in 0..n {
        z[k * n + k] = T::one();
    }
    let two = T::of(2.0);
    let eps = T::eps();

    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= eps * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_SWEEPS {
                return Err(Error::Numerical(format!(
                    "tridiagonal QL failed to converge for eigenvalue {l} of {n} after {MAX_SWEEPS} sweeps \
                     (residual coupling {:e})",
                    e[l].abs().to_f64_lossy()
                )));
            }
            // Wilkinson shift from the leading 2x2 block.
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(T::one());
            let signed_r = if g >= T::zero() { r } else { -r };
            g = d[m] - d[l] + e[l] / (g + signed_r);
            let (mut s, mut c, mut p) = (T::one(), T::one(), T::zero());
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] -= p;
                    e[m] = T::zero();
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let (lo, hi) = z.split_at_mut((i + 1) * n);
                let zi = &mut lo[i * n..];
                let zi1 = &mut hi[..n];
                for k in 0..n {
                    let f = zi1[k];
                    zi1[k] = s * zi[k] + c * f;
                    zi[k] = c * zi[k] - s * f;
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = T::zero();
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[b].partial_cmp(&d[a]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&k| d[k]).collect();
    let mut vectors = Vec::with_capacity(n * n);
    for &k in &order {
        vectors.extend_from_slice(&z[k * n..(k + 1) * n]);
    }
    Ok(TridiagonalEigen { values, vectors, n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn dense(diag: &[f64], off: &[f64]) -> DMatrix<f64> {
        let n = diag.len();
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                diag[i]
            } else if i + 1 == j {
                off[i]
            } else if j + 1 == i {
                off[j]
            } else {
                0.0
            }
        })
    }

    #[test]
    fn matches_dense_symmetric_eigen() {
        let diag = [4.0, -1.0, 2.5, 0.3, 7.0, -3.2];
        let off = [1.0, 0.5, -2.0, 0.25, 1.5];
        let eig = symmetric_tridiagonal_eigen(&diag, &off).unwrap();
        let a = dense(&diag, &off);
        let mut oracle: Vec<f64> = a.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        oracle.sort_by(|x, y| y.partial_cmp(x).unwrap());
        for (x, y) in eig.values.iter().zip(&oracle) {
            assert!((x - y).abs() < 1e-12, "{x} vs {y}");
        }
        for k in 0..diag.len() {
            let v = nalgebra::DVector::from_column_slice(eig.vector(k));
            let res = &a * &v - &v * eig.values[k];
            assert!(res.norm() < 1e-12);
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn diagonal_input_is_returned_sorted() {
        let eig = symmetric_tridiagonal_eigen(&[1.0, 3.0, 2.0], &[0.0, 0.0]).unwrap();
        assert_eq!(eig.values, vec![3.0, 2.0, 1.0]);
        assert_eq!(eig.vector(0), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn one_by_one() {
        let eig = symmetric_tridiagonal_eigen(&[5.0_f64], &[]).unwrap();
        assert_eq!(eig.values, vec![5.0]);
        assert_eq!(eig.vector(0), &[1.0]);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(symmetric_tridiagonal_eigen::<f64>(&[], &[]).is_err());
        assert!(symmetric_tridiagonal_eigen(&[1.0, 2.0], &[]).is_err());
    }
}
