//! Scalar abstraction for the numeric core.
//!
//! Series storage, digit rendering and error metrics are written once over
//! [`Scalar`] and instantiated for `f32` and `f64`. The rest of the pipeline
//! works in `f64` through the aliases re-exported at the crate root.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point type usable by the numeric core: `f32` or `f64`.
pub trait Scalar:
    'static
    + Send
    + Sync
    + Float
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + Default
    + Debug
    + Display
    + FromStr
    + serde::Serialize
    + serde::de::DeserializeOwned
{
    /// Lossless-enough conversion from an `f64` literal.
    fn of(value: f64) -> Self {
        Self::from_f64(value).expect("scalar conversion from f64")
    }

    /// Conversion from a count, used for means.
    fn of_count(n: usize) -> Self {
        Self::from_usize(n).expect("scalar conversion from usize")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar conversion to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
