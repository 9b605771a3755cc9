//! Scalar abstraction for the numeric kernels.

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use std::fmt;

/// Floating-point scalar the solvers are generic over.
///
/// `f64` is the intended working type; `f32` instantiates and is exercised by
/// a smoke test, but the SI magnitudes involved (1e-34 .. 1e24) leave it no
/// usable precision for the tight tolerances the solvers are tested at.
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + fmt::Debug + fmt::Display + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` constant. Panics only if the value is
    /// not representable at all (e.g. overflow to infinity), which no
    /// constant in this crate triggers for `f32` or `f64`.
    fn of(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("constant not representable in scalar type")
    }

    /// Conversion to `f64` for diagnostics and error payloads.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}
