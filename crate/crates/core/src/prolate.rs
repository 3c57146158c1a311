//! Discrete prolate spheroidal sequences.
//!
//! Sequences are obtained from the symmetric tridiagonal matrix that commutes
//! with the sinc kernel; concentrations are then recovered as Rayleigh
//! quotients against the kernel itself.

use nalgebra::DMatrix;

use crate::error::{domain, Error, Result};
use crate::scalar::{bandlimited_kernel, Real};
use crate::tridiag::symmetric_tridiagonal_eigen;

/// Concentrations are reported non-increasing inside `[LAMBDA_FLOOR, 1 - LAMBDA_CEIL_GAP]`.
pub const LAMBDA_FLOOR: f64 = 1e-300;
pub const LAMBDA_CEIL_GAP: f64 = 1e-16;

/// Length-`N` Slepian sequences and their band concentrations.
#[derive(Debug, Clone)]
pub struct DpssSet<T: Real> {
    pub length: usize,
    pub half_bandwidth: T,
    /// `length x order`, column `l` is the order-`l` sequence.
    pub sequences: DMatrix<T>,
    /// Fraction of each sequence's energy inside `[-W, W]`, decreasing.
    pub eigenvalues: Vec<T>,
    /// Number of eigenvalues that had to be clamped into the reported range.
    pub clamped: usize,
}

impl<T: Real> DpssSet<T> {
    pub fn order(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn sequence(&self, l: usize) -> &[T] {
        let n = self.length;
        &self.sequences.as_slice()[l * n..(l + 1) * n]
    }

    /// Sample `n` of sequence `l` with the middle sample at `n = 0`.
    ///
    /// Only meaningful for odd lengths; returns `None` outside the support.
    pub fn centered(&self, l: usize, n: i64) -> Option<T> {
        let half = (self.length / 2) as i64;
        let idx = n + half;
        if idx < 0 || idx >= self.length as i64 {
            None
        } else {
            Some(self.sequences[(idx as usize, l)])
        }
    }
}

fn check_half_bandwidth<T: Real>(w: T) -> Result<()> {
    let ok = w > T::zero() && w <= T::of(0.5);
    if !ok {
        return Err(domain!("half-bandwidth must lie in (0, 0.5], got {w}"));
    }
    Ok(())
}

/// The `N x N` matrix `sin(2 pi W (m - n)) / (pi (m - n))`, `2W` on the diagonal.
pub fn sinc_kernel_matrix<T: Real>(length: usize, half_bandwidth: T) -> Result<DMatrix<T>> {
    if length == 0 {
        return Err(domain!("kernel length must be positive"));
    }
    check_half_bandwidth(half_bandwidth)?;
    let row = kernel_row(length, half_bandwidth);
    Ok(DMatrix::from_fn(length, length, |m, n| row[m.abs_diff(n)]))
}

fn kernel_row<T: Real>(length: usize, w: T) -> Vec<T> {
    (0..length).map(|k| bandlimited_kernel(T::of_usize(k), w)).collect()
}

/// Generates the `order` most band-concentrated sequences of length `length`.
///
/// Signs are fixed so that even-order sequences have positive mean and
/// odd-order sequences have a positive first significant sample.
pub fn generate_dpss<T: Real>(length: usize, half_bandwidth: T, order: usize) -> Result<DpssSet<T>> {
    if length == 0 {
        return Err(domain!("sequence length must be positive"));
    }
    check_half_bandwidth(half_bandwidth)?;
    if order == 0 || order > length {
        return Err(domain!("order must lie in 1..={length}, got {order}"));
    }

    let n = length;
    let half = T::of(0.5);
    let cos_w = (T::two_pi() * half_bandwidth).cos();
    let diag: Vec<T> = (0..n)
        .map(|i| {
            let c = (T::of_usize(n - 1) - T::of_usize(2 * i)) * half;
            c * c * cos_w
        })
        .collect();
    let off: Vec<T> = (1..n).map(|i| T::of_usize(i) * T::of_usize(n - i) * half).collect();
    let eig = symmetric_tridiagonal_eigen(&diag, &off)
        .map_err(|e| Error::Numerical(format!("DPSS (N={n}, W={half_bandwidth}): {e}")))?;

    let kernel = kernel_row(n, half_bandwidth);
    let lo = T::of(LAMBDA_FLOOR);
    let hi = T::one() - T::of(LAMBDA_CEIL_GAP);
    let mut sequences = DMatrix::<T>::zeros(n, order);
    let mut eigenvalues = Vec::with_capacity(order);
    let mut clamped = 0;
    let mut scratch = vec![T::zero(); n];
    for l in 0..order {
        let v = eig.vector(l);
        let sign = sign_for(l, v);
        let mut col = sequences.column_mut(l);
        for (dst, &x) in col.iter_mut().zip(v) {
            *dst = sign * x;
        }
        let lambda = rayleigh_quotient(&kernel, col.as_slice(), &mut scratch);
        let reported = if lambda < lo {
            clamped += 1;
            lo
        } else if lambda > hi {
            clamped += 1;
            hi
        } else {
            lambda
        };
        // The commuting-matrix order is exact; a quotient above its predecessor is roundoff.
        let reported = eigenvalues.last().map_or(reported, |&prev: &T| reported.min(prev));
        eigenvalues.push(reported);
    }

    Ok(DpssSet {
        length,
        half_bandwidth,
        sequences,
        eigenvalues,
        clamped,
    })
}

fn sign_for<T: Real>(order: usize, v: &[T]) -> T {
    let n = v.len();
    let peak = v.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    let significant = peak * T::eps().sqrt();
    let first_significant = || {
        v[..n.div_ceil(2)]
            .iter()
            .copied()
            .find(|x| x.abs() > significant)
            .unwrap_or(T::one())
    };
    let reference = if order.is_multiple_of(2) {
        let sum = v.iter().fold(T::zero(), |acc, &x| acc + x);
        if sum.abs() > significant {
            sum
        } else {
            first_significant()
        }
    } else {
        first_significant()
    };
    if reference < T::zero() {
        -T::one()
    } else {
        T::one()
    }
}

/// `v^T A v` for the symmetric Toeplitz matrix whose first row is `kernel`.
fn rayleigh_quotient<T: Real>(kernel: &[T], v: &[T], scratch: &mut [T]) -> T {
    let n = v.len();
    for m in 0..n {
        let mut acc = T::zero();
        for (k, &x) in v.iter().enumerate() {
            acc += kernel[m.abs_diff(k)] * x;
        }
        scratch[m] = acc;
    }
    v.iter()
        .zip(scratch.iter())
        .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn full_band_kernel_is_identity() {
        let a = sinc_kernel_matrix(3, 0.5_f64).unwrap();
        assert_eq!(a, DMatrix::identity(3, 3));
    }

    #[test]
    fn quarter_band_kernel_closed_form() {
        let a = sinc_kernel_matrix(2, 0.25_f64).unwrap();
        assert!((a[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((a[(0, 1)] - 1.0 / PI).abs() < 1e-15);
        assert_eq!(a[(0, 1)], a[(1, 0)]);
    }

    #[test]
    fn kernel_rejects_bad_bandwidth() {
        assert!(matches!(sinc_kernel_matrix(4, 0.0_f64), Err(Error::Domain(_))));
        assert!(matches!(sinc_kernel_matrix(4, 0.51_f64), Err(Error::Domain(_))));
        assert!(matches!(sinc_kernel_matrix(4, f64::NAN), Err(Error::Domain(_))));
        assert!(sinc_kernel_matrix(0, 0.25_f64).is_err());
    }

    #[test]
    fn full_band_concentrations_are_one() {
        let set = generate_dpss(9, 0.5_f64, 9).unwrap();
        for &l in &set.eigenvalues {
            assert!((l - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn order_above_length_is_rejected() {
        assert!(matches!(generate_dpss(4, 0.25_f64, 5), Err(Error::Domain(_))));
        assert!(matches!(generate_dpss(4, 0.25_f64, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn sign_convention() {
        let set = generate_dpss(16, 0.2_f64, 6).unwrap();
        for l in 0..6 {
            let s = set.sequence(l);
            if l % 2 == 0 {
                assert!(s.iter().sum::<f64>() > 0.0);
            } else {
                let first = s.iter().find(|x| x.abs() > 1e-8).unwrap();
                assert!(*first > 0.0);
            }
        }
    }

    #[test]
    fn centered_indexing() {
        let set = generate_dpss(5, 0.25_f64, 2).unwrap();
        assert_eq!(set.centered(0, 0), Some(set.sequences[(2, 0)]));
        assert_eq!(set.centered(1, -2), Some(set.sequences[(0, 1)]));
        assert_eq!(set.centered(0, 3), None);
    }

    #[test]
    fn single_precision_generation() {
        let set = generate_dpss(12, 0.2_f32, 3).unwrap();
        let g = set.sequences.transpose() * &set.sequences;
        assert!((g - DMatrix::<f32>::identity(3, 3)).abs().max() < 1e-5);
        assert!(set.eigenvalues[0] > set.eigenvalues[2]);
    }
}
