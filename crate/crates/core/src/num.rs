//! Scalar abstraction the numeric core is generic over.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar: `f32` or `f64`.
///
/// Everything in this crate (kernels, quadrature, LMIs, integrators) is
/// written against this trait; the crate root exports `*64` aliases for the
/// common case.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Lossy conversion from an `f64` constant.
#[inline]
pub(crate) fn r64<T: Real>(v: f64) -> T {
    T::from_f64(v).expect("f64 constant must convert")
}

/// Lossy conversion from a count.
#[inline]
pub(crate) fn rus<T: Real>(v: usize) -> T {
    T::from_usize(v).expect("usize must convert")
}
