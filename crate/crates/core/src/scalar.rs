//! Floating-point abstraction shared by every module.
//!
//! All tables, predictor coefficients and error norms are generic over
//! [`Scalar`]. `f64` is the default; `f32` works for quick experiments and,
//! with the `extended` feature, [`Extended`] carries about 40 significant
//! digits for high-degree runs where binary64 hits round-off.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar type used throughout the solver.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Short name used in reports and CLI output.
    const NAME: &'static str;

    /// Unit round-off of the type. Kept separate from `Float::epsilon`, which
    /// some software float crates do not report faithfully.
    fn eps() -> Self {
        Self::epsilon()
    }

    /// Lossy conversion from `f64`. Constants written as literals go through here.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("integer representable in scalar type")
    }

    /// Lossy conversion to `f64`, used for reporting.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Number of significant decimal digits needed to round-trip a value.
    fn round_trip_digits() -> usize;
}

impl Scalar for f64 {
    const NAME: &'static str = "f64";
    fn round_trip_digits() -> usize {
        17
    }
}

impl Scalar for f32 {
    const NAME: &'static str = "f32";
    fn round_trip_digits() -> usize {
        9
    }
}

/// 40-digit software float.
#[cfg(feature = "extended")]
pub type Extended = num_bigfloat::BigFloat;

#[cfg(feature = "extended")]
impl Scalar for num_bigfloat::BigFloat {
    const NAME: &'static str = "bigfloat40";

    fn eps() -> Self {
        num_bigfloat::BigFloat::parse("1e-39").expect("valid literal")
    }

    fn round_trip_digits() -> usize {
        40
    }
}

/// Max-norm of a slice.
pub fn max_abs<S: Scalar>(values: &[S]) -> S {
    values.iter().fold(S::zero(), |acc, v| acc.max(v.abs()))
}

/// Max-norm of the difference of two equally sized slices.
pub fn max_abs_diff<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .fold(S::zero(), |acc, (x, y)| acc.max((*x - *y).abs()))
}
