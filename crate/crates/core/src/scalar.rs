//! Scalar abstraction so the numeric code runs on `f32` or `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar used throughout the numeric modules.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Convert an `f64` constant into this scalar type.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 converts to scalar")
    }

    /// Widen to `f64` (used by serialization and reporting).
    fn to64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }

    fn ln_2pi() -> Self {
        Self::of(core::f64::consts::TAU.ln())
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
