//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive};

/// Real floating-point scalar (`f32` or `f64`).
///
/// Tolerances throughout the crate are stated for `f64`; converting them with
/// [`Real::tol`] clamps them to a few ulps so the same code stays meaningful
/// in single precision.
pub trait Real: Float + FloatConst + FromPrimitive + Debug + Display + Sum + Default + Send + Sync + 'static {
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Converts a tolerance, never going below `64 * epsilon`.
    fn tol(x: f64) -> Self {
        Self::lit(x).max(Self::epsilon() * Self::lit(64.0))
    }

    /// Converts an underflow floor, never going below the smallest normal value.
    fn tiny(x: f64) -> Self {
        Self::lit(x).max(Self::min_positive_value())
    }

    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub type C<T> = Complex<T>;

#[inline]
pub(crate) fn cplx<T: Real>(re: T) -> C<T> {
    Complex::new(re, T::zero())
}

/// `ln n!`, summed directly; exact enough for the truncation caps used here.
pub fn ln_factorial<T: Real>(n: usize) -> T {
    (2..=n).map(|k| T::from_usize_lossy(k).ln()).sum()
}

/// Relative distance `|a - b| / max(|a|, |b|)`, with an absolute floor on the
/// denominator so that two values that are both zero compare equal.
pub fn rel_diff<T: Real>(a: T, b: T, abs_floor: T) -> T {
    let scale = a.abs().max(b.abs()).max(abs_floor);
    if scale == T::zero() {
        T::zero()
    } else {
        (a - b).abs() / scale
    }
}
