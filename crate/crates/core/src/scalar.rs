//! Floating-point scalar abstraction.
//!
//! Every log-space routine in this crate is written once against [`Scalar`]
//! and instantiated for `f32` and `f64`. The exact path does not go through
//! this trait; it uses [`crate::ExactRational`] directly.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// A real floating-point type usable by the log-space code paths.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` constant into this type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal is representable")
    }

    /// Converts an integer count into this type.
    #[inline]
    fn count(x: u64) -> Self {
        Self::from_u64(x).expect("integer count is representable")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
