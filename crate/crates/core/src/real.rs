use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssignOps, ToPrimitive};

/// Floating-point scalar used throughout the crate: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssignOps + Sum<Self> + Debug + Display + 'static
{
}

impl<T> Real for T where
    T: Float + FromPrimitive + ToPrimitive + NumAssignOps + Sum<Self> + Debug + Display + 'static
{
}

/// Converts an `f64` constant into the working scalar type.
pub(crate) fn real<F: Real>(x: f64) -> F {
    F::from_f64(x).expect("constant not representable in scalar type")
}

/// Converts a count into the working scalar type.
pub(crate) fn real_of_usize<F: Real>(x: usize) -> F {
    F::from_usize(x).expect("count not representable in scalar type")
}
