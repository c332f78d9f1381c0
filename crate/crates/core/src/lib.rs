//! Exponents of SLE(κ,ρ) boundaries in half-plane and wedge geometries, and
//! the numerics that test them: the wedge slit map, Loewner-chain Monte
//! Carlo, and self-avoiding walk enumeration and sampling.
//!
//! [`exponents`], [`conformal`] and [`estimate`] are generic over the scalar
//! type; the rational laws also evaluate exactly over `num_rational::Ratio`.
//! The simulators in [`loewner`] and [`saw`] run in `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conformal;
pub mod error;
pub mod estimate;
pub mod exponents;
pub mod loewner;
pub mod saw;
mod scalar;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::{Field, Real};

pub type SleParameterPair64 = exponents::SleParameterPair<f64>;
pub type RestrictionExponent64 = exponents::RestrictionExponent<f64>;
pub type WedgeAngle64 = exponents::WedgeAngle<f64>;
pub type WedgeRay64 = conformal::WedgeRay<f64>;
pub type SlitMap64 = conformal::SlitMap<f64>;
pub type FitResult64 = estimate::FitResult<f64>;

pub type WedgeAngle32 = exponents::WedgeAngle<f32>;
pub type RestrictionExponent32 = exponents::RestrictionExponent<f32>;
pub type SlitMap32 = conformal::SlitMap<f32>;

/// Exact rational scalar for the polynomial exponent laws.
pub type Rational = num_rational::Ratio<i64>;
pub type WedgeAngleQ = exponents::WedgeAngle<Rational>;
pub type RestrictionExponentQ = exponents::RestrictionExponent<Rational>;
