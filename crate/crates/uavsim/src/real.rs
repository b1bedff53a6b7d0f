use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive};

/// Scalar trait for the crate's generic numerics.
///
/// Everything the power and reward math needs from a floating-point type.
/// Blanket-implemented, so both `f32` and `f64` qualify.
pub trait Real: Float + FromPrimitive + Debug + Display + Default + Send + Sync + 'static {
    /// Lossless-enough conversion from `f64` constants.
    fn from_f64_const(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 constant")
    }
}

impl<T> Real for T where T: Float + FromPrimitive + Debug + Display + Default + Send + Sync + 'static {}
