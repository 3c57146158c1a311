//! Scalar abstraction shared by every numerical routine in the crate.

use nalgebra::{Complex, RealField};
use num_traits::{FloatConst, FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display};

/// Real floating point type the crate's algorithms are written against.
///
/// Implemented for `f32` and `f64`. Elementary functions come from
/// [`RealField`]; constants from [`FloatConst`].
pub trait Real:
    RealField + Copy + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Machine epsilon of the type.
    fn eps() -> Self;

    /// Lossy conversion from `f64`.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable")
    }

    /// Lossy conversion from `usize`.
    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize is representable")
    }

    /// Lossy conversion from `i64`.
    #[inline]
    fn of_i64(n: i64) -> Self {
        Self::from_i64(n).expect("i64 is representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {
    fn eps() -> Self {
        f32::EPSILON
    }
}

impl Real for f64 {
    fn eps() -> Self {
        f64::EPSILON
    }
}

/// Complex number over a [`Real`] scalar.
pub type Cplx<T> = Complex<T>;

/// `e^{j theta}`.
#[inline]
pub fn cis<T: Real>(theta: T) -> Cplx<T> {
    let (s, c) = theta.sin_cos();
    Complex::new(c, s)
}

/// Normalized sinc, `sin(pi x) / (pi x)`, exact zero at nonzero integers.
///
/// The argument is reduced to `x = n + f` with `|f| <= 1/2` before the sine
/// is evaluated, so large arguments keep full relative accuracy.
pub fn sinc<T: Real>(x: T) -> T {
    if x == T::zero() {
        return T::one();
    }
    let n = x.round();
    let f = x - n;
    if f == T::zero() {
        return T::zero();
    }
    let s = (T::PI() * f).sin();
    // sin(pi (n + f)) = (-1)^n sin(pi f)
    let odd = n.to_i64().map(|k| k & 1 == 1).unwrap_or(false);
    let s = if odd { -s } else { s };
    s / (T::PI() * x)
}

/// Frequency-scaled interpolation kernel `2W sinc(2W x)`; equals [`sinc`] at `W = 1/2`.
pub fn bandlimited_kernel<T: Real>(x: T, half_bandwidth: T) -> T {
    let two_w = half_bandwidth + half_bandwidth;
    if two_w == T::one() {
        return sinc(x);
    }
    two_w * sinc(two_w * x)
}

/// Converts a linear power ratio to decibels.
#[inline]
pub fn to_db<T: Real>(x: T) -> T {
    T::of(10.0) * x.log10()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinc_at_integers_is_exact() {
        assert_eq!(sinc(0.0_f64), 1.0);
        for k in 1..50 {
            assert_eq!(sinc(k as f64), 0.0);
            assert_eq!(sinc(-(k as f64)), 0.0);
        }
    }

    #[test]
    fn sinc_half_sample() {
        let v = sinc(0.5_f64);
        assert!((v - 2.0 / std::f64::consts::PI).abs() < 1e-15);
        assert!((sinc(-0.5_f64) - v).abs() < 1e-15);
        assert!((sinc(1.5_f64) + 2.0 / (3.0 * std::f64::consts::PI)).abs() < 1e-15);
    }

    #[test]
    fn sinc_large_argument_keeps_precision() {
        let x = 1450.3_f64;
        let expect = (std::f64::consts::PI * 0.3).sin() / (std::f64::consts::PI * x);
        let rel = (sinc(x) - expect).abs() / expect.abs();
        assert!(rel < 1e-10, "rel {rel}");
    }

    #[test]
    fn sinc_f32() {
        assert!((sinc(0.5_f32) - std::f32::consts::FRAC_2_PI).abs() < 1e-6);
    }

    #[test]
    fn kernel_reduces_to_sinc_at_full_band() {
        for x in [-2.3, -0.5, 0.0, 0.7, 11.1] {
            assert_eq!(bandlimited_kernel(x, 0.5_f64), sinc(x));
        }
        let w = 0.25_f64;
        assert!((bandlimited_kernel(0.0, w) - 0.5).abs() < 1e-15);
    }
}
