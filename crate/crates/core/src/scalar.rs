//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar the models are generic over. Implemented for `f32` and `f64`.
pub trait Real:
    'static
    + Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + Sum
    + for<'a> Sum<&'a Self>
{
    /// Converts an `f64` literal. Panics only for values the type cannot represent at all.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// Lossy conversion to `f64` for special functions and reporting.
    #[inline]
    fn f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar type")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `(1 - exp(-rate * tau)) / rate`, continuous through `rate = 0` where it equals `tau`.
#[inline]
pub fn decay_integral<T: Real>(rate: T, tau: T) -> T {
    let x = rate * tau;
    if x.abs() < T::lit(1e-12) {
        tau * (T::one() - x / T::lit(2.0))
    } else {
        -(-x).exp_m1() / rate
    }
}

/// Standard normal CDF.
pub fn norm_cdf<T: Real>(x: T) -> T {
    T::lit(0.5 * statrs::function::erf::erfc(-x.f64() / std::f64::consts::SQRT_2))
}

/// Standard normal density.
pub fn norm_pdf<T: Real>(x: T) -> T {
    (-(x * x) / T::lit(2.0)).exp() / (T::lit(2.0) * T::PI()).sqrt()
}

/// Inverse standard normal CDF for `p` in `(0, 1)`.
#[inline]
pub fn norm_inv_cdf(p: f64) -> f64 {
    -std::f64::consts::SQRT_2 * statrs::function::erf::erfc_inv(2.0 * p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decay_integral_is_continuous_at_zero() {
        let tau = 0.75_f64;
        assert!((decay_integral(0.0, tau) - tau).abs() < 1e-15);
        let a = decay_integral(1e-9, tau);
        let b = decay_integral(-1e-9, tau);
        assert!((a - tau).abs() < 1e-9 && (b - tau).abs() < 1e-9);
        let r = 3.0;
        assert!((decay_integral(r, tau) - (1.0 - (-r * tau).exp()) / r).abs() < 1e-14);
    }

    #[test]
    fn normal_quantile_inverts_cdf() {
        for &p in &[1e-10, 0.001, 0.2, 0.5, 0.8, 0.999, 1.0 - 1e-10] {
            let x = norm_inv_cdf(p);
            assert!((norm_cdf(x) - p).abs() < 1e-10 * p.max(1e-3), "p={p} err={}", norm_cdf(x) - p);
        }
    }

    #[test]
    fn works_in_single_precision() {
        let v: f32 = decay_integral(2.0, 0.5);
        assert!((v - (1.0 - (-1.0f32).exp()) / 2.0).abs() < 1e-6);
        assert!((norm_cdf(0.0f32) - 0.5).abs() < 1e-7);
    }
}
