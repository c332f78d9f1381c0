//! Scalar abstractions.
//!
//! The closed-form exponent laws split into two families. Rational
//! polynomial laws (restriction exponents from ρ, the n-walk counting
//! exponents, the wedge corrections) only need field operations and are
//! generic over [`Field`], so they can be evaluated exactly with a rational
//! type. Everything involving square roots, powers or logarithms requires
//! [`Real`] (`f32` or `f64`).

use std::fmt::Debug;
use std::ops::Neg;

use num_traits::{Float, FloatConst, FromPrimitive, Num};

/// An ordered field: `f32`, `f64`, or an exact rational such as
/// `num_rational::Ratio<i64>`.
pub trait Field: Num + Copy + PartialOrd + Neg<Output = Self> + FromPrimitive + Debug {}

impl<T> Field for T where T: Num + Copy + PartialOrd + Neg<Output = T> + FromPrimitive + Debug {}

/// Floating point scalar: f32 or f64.
pub trait Real: Field + Float + FloatConst + Send + Sync {}

impl<T> Real for T where T: Field + Float + FloatConst + Send + Sync {}

/// Small integer literal in any field.
#[inline]
pub(crate) fn lit<T: Field>(v: i64) -> T {
    T::from_i64(v).expect("small integer literal is representable")
}

/// Exact ratio `num / den` in any field.
#[inline]
pub(crate) fn frac<T: Field>(num: i64, den: i64) -> T {
    lit::<T>(num) / lit::<T>(den)
}

/// Conversion of an `f64` constant into a real scalar.
#[inline]
pub(crate) fn real<T: Real>(v: f64) -> T {
    T::from_f64(v).expect("finite constant")
}
