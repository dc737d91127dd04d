//! Scalar abstraction for thresholds, densities and closeness values.
//!
//! Threshold values are exact rationals in general (the codegree formula has
//! half-integer branches), while the statistical code is happy with floats.
//! Everything numeric that is not a count goes through [`Scalar`].

use num_rational::Ratio;
use num_traits::{Num, NumCast, ToPrimitive};
use std::fmt::{Debug, Display};

pub trait Scalar:
    Num + Clone + PartialOrd + Debug + Display + ToPrimitive + Send + Sync + 'static
{
    /// `num / den`, exact where the type allows.
    fn from_ratio(num: i64, den: i64) -> Self;

    fn from_count(count: u64) -> Self {
        Self::from_ratio(count as i64, 1)
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
}

impl Scalar for f32 {
    fn from_ratio(num: i64, den: i64) -> Self {
        (num as f64 / den as f64) as f32
    }
}

impl Scalar for Ratio<i64> {
    fn from_ratio(num: i64, den: i64) -> Self {
        Ratio::new(num, den)
    }
}

impl Scalar for Ratio<i128> {
    fn from_ratio(num: i64, den: i64) -> Self {
        Ratio::new(num as i128, den as i128)
    }

    fn from_count(count: u64) -> Self {
        Ratio::from_integer(count as i128)
    }
}

/// Lossy conversion between scalar types via `f64`, exact for rationals with
/// small numerators and denominators.
pub fn cast<S: Scalar, T: Scalar + NumCast>(value: &S) -> Option<T> {
    NumCast::from(value.to_f64_lossy())
}

/// `true` iff the integer `degree` strictly exceeds `threshold`.
pub fn exceeds<S: Scalar>(degree: u64, threshold: &S) -> bool {
    S::from_count(degree) > *threshold
}
