//! Scalar abstraction shared by every numeric module.
//!
//! All geometry, projection and filtering code is written against [`Real`] so
//! the same pipeline runs in single or double precision. File formats store
//! `f32`; in-memory computation defaults to `f64` (see the aliases in the
//! crate root).

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Tolerance on `‖RᵀR − I‖∞` and the bottom row when checking rigidity.
    fn rigidity_tolerance() -> Self;

    /// Converts an `f64` literal into this scalar.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar converts to f64")
    }

    #[inline]
    fn as_f32(self) -> f32 {
        self.to_f32().expect("finite scalar converts to f32")
    }
}

impl Real for f32 {
    fn rigidity_tolerance() -> Self {
        1e-5
    }
}

impl Real for f64 {
    fn rigidity_tolerance() -> Self {
        1e-9
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_round_trip() {
        assert_eq!(f32::lit(0.5), 0.5f32);
        assert_eq!(f64::lit(0.1).as_f64(), 0.1);
        assert_eq!(0.25f64.as_f32(), 0.25f32);
    }
}
