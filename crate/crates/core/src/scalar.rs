use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

mod private {
    pub trait Sealed {}
    impl Sealed for f32 {}
    impl Sealed for f64 {}
}

/// Floating point type the samplers, estimators and ranker are written against.
///
/// Count tables are always integers; only probabilities, priors and ranker
/// weights live in `Scalar`. Implemented for `f32` and `f64`.
pub trait Scalar:
    private::Sealed
    + Float
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Natural log of the gamma function.
    fn ln_gamma(self) -> Self;

    /// Lossless-enough conversion from a count.
    #[inline]
    fn from_count(n: u32) -> Self {
        <Self as FromPrimitive>::from_u32(n).expect("count fits in a float")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("usize fits in a float")
    }

    #[inline]
    fn from_f64_lossy(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 converts")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).expect("float converts to f64")
    }
}

impl Scalar for f64 {
    #[inline]
    fn ln_gamma(self) -> Self {
        statrs::function::gamma::ln_gamma(self)
    }
}

impl Scalar for f32 {
    #[inline]
    fn ln_gamma(self) -> Self {
        statrs::function::gamma::ln_gamma(self as f64) as f32
    }
}

/// Draws an index from unnormalized positive weights given `u` uniform in `[0, 1)`.
///
/// Falls back to the last index when rounding leaves `u * total` past the final
/// cumulative sum.
pub fn sample_index<F: Scalar>(weights: &[F], u: F) -> usize {
    debug_assert!(!weights.is_empty());
    let total = weights.iter().fold(F::zero(), |acc, &w| acc + w);
    let mut target = u * total;
    for (i, &w) in weights.iter().enumerate() {
        if target < w {
            return i;
        }
        target = target - w;
    }
    weights.len() - 1
}

/// Normalizes in place; returns the pre-normalization total.
pub fn normalize<F: Scalar>(values: &mut [F]) -> F {
    let total = values.iter().fold(F::zero(), |acc, &w| acc + w);
    if total > F::zero() {
        for v in values.iter_mut() {
            *v = *v / total;
        }
    }
    total
}
