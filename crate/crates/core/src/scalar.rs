//! Scalar abstraction shared by the circuit model and the Hamiltonian code.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating point type the physics code is generic over (`f32` or `f64`).
///
/// Math goes through [`RealField`] so that nalgebra's eigensolvers work on
/// the same type; conversions to and from `f64` literals use num-traits.
pub trait Scalar: RealField + Copy + FromPrimitive + ToPrimitive + Default + Send + Sync + 'static {
    /// Relative machine precision of the type.
    const EPSILON: f64;

    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::lit(n as f64)
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn is_finite_value(self) -> bool {
        self.to_f64_lossy().is_finite()
    }
}

impl Scalar for f64 {
    const EPSILON: f64 = f64::EPSILON;
}

impl Scalar for f32 {
    const EPSILON: f64 = f32::EPSILON as f64;
}
