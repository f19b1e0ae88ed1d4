use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumCast};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point scalar used for angles, AU weights and timestamps: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + NumCast
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` literal. Values out of range saturate to infinity.
    fn lit(x: f64) -> Self {
        <Self as NumCast>::from(x).unwrap_or_else(|| if x < 0.0 { Self::neg_infinity() } else { Self::infinity() })
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Rounds to `digits` fractional decimal digits.
    fn round_to(self, digits: i32) -> Self {
        let scale = Self::lit(10f64.powi(digits));
        (self * scale).round() / scale
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
