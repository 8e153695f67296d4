//! Scalar abstraction shared by the model, solver and simulator.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point scalar the numerical core is generic over (`f32` or `f64`).
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal. Panics only if the target cannot represent finite values.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// Lossy conversion for reporting and serialization.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// A tolerance stated for double precision, rescaled to this type's epsilon.
    ///
    /// Returns `tol` unchanged (up to rounding) for `f64`.
    fn tol(tol: f64) -> Self {
        Self::epsilon() * Self::lit(tol / f64::EPSILON)
    }
}

impl Real for f32 {}
impl Real for f64 {}
