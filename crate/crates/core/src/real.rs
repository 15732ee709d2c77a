//! Scalar abstraction: the whole solver is generic over the floating-point
//! type through this trait, with `f64` aliases exported at the crate root.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar the library operates on (`f32` or `f64`).
///
/// `Display`/`FromStr` are required so CSV emission round-trips bit-exactly
/// (Rust prints the shortest decimal that parses back to the same value).
pub trait Real:
    Float + FromPrimitive + Debug + Display + FromStr + Sum + Send + Sync + 'static
{
    /// Convert an `f64` constant into the scalar type.
    #[inline]
    fn cast(v: f64) -> Self {
        Self::from_f64(v).expect("f64 constant must be representable")
    }

    #[inline]
    fn two() -> Self {
        Self::one() + Self::one()
    }

    #[inline]
    fn half() -> Self {
        Self::cast(0.5)
    }
}

impl Real for f32 {}
impl Real for f64 {}
