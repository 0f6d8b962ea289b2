//! Scalar abstraction for real-valued measures.
//!
//! Structural machinery (categories, lattices, relations) is discrete; the
//! real-valued surface (metrics, entropies, densities, distortions) is generic
//! over any floating scalar. Metric values are also available as exact
//! rationals for tests that tolerate no rounding.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive};

/// Floating scalar used by every real-valued measure.
pub trait Real: Float + FromPrimitive + Debug + Display + Send + Sync {}

impl<T> Real for T where T: Float + FromPrimitive + Debug + Display + Send + Sync {}

/// Exact rational form of count quotients such as the Jaccard metric.
pub type ExactRatio = num_rational::Ratio<u64>;

/// Exact quotient of two counts; `0/0` is defined as zero.
pub fn exact_ratio(num: u64, den: u64) -> ExactRatio {
    if den == 0 {
        ExactRatio::new_raw(0, 1)
    } else {
        ExactRatio::new(num, den)
    }
}

/// Convert a count quotient into a floating scalar; `0/0` is zero.
pub fn ratio_to_real<R: Real>(num: u64, den: u64) -> R {
    if den == 0 {
        R::zero()
    } else {
        R::from_u64(num).unwrap() / R::from_u64(den).unwrap()
    }
}

pub fn to_real<R: Real>(n: u64) -> R {
    R::from_u64(n).unwrap()
}
