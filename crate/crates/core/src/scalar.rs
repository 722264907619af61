//! Scalar abstraction shared by the numeric substrate, the encoder and the matcher.
//!
//! Training runs in `f32`; gradient checks run the identical code paths in `f64`
//! so that central differences are accurate enough to be meaningful.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Widen to the accumulation type used by reductions.
    fn widen(self) -> f64;
    /// Narrow from the accumulation type.
    fn narrow(v: f64) -> Self;

    fn lit(v: f64) -> Self {
        Self::narrow(v)
    }
}

impl Scalar for f32 {
    #[inline(always)]
    fn widen(self) -> f64 {
        self as f64
    }
    #[inline(always)]
    fn narrow(v: f64) -> Self {
        v as f32
    }
}

impl Scalar for f64 {
    #[inline(always)]
    fn widen(self) -> f64 {
        self
    }
    #[inline(always)]
    fn narrow(v: f64) -> Self {
        v
    }
}
