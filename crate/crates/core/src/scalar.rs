//! Floating point abstraction the rest of the crate is generic over.

use core::fmt;
use core::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Scalar type of all geometric quantities.
///
/// The solver needs ordinary float arithmetic, the constant pi, and
/// conversions from grid sizes and literals. `f32` and `f64` satisfy the
/// bound through the blanket impl; `f64` is the type the shipped tolerances
/// are calibrated for.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + 'static
{
    /// Embeds an `f64` literal. Every literal used by the crate is
    /// representable in `f32` and wider, so the conversion cannot fail for
    /// the supported scalar types.
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("float literal out of range for scalar type")
    }

    /// Cast for diagnostics. Error payloads report plain `f64` so the error
    /// types stay free of the scalar parameter.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Embeds a grid size.
    fn from_count(count: usize) -> Self {
        Self::from_usize(count).expect("grid size out of range for scalar type")
    }
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + AddAssign
        + SubAssign
        + MulAssign
        + DivAssign
        + fmt::Debug
        + fmt::Display
        + Send
        + Sync
        + 'static
{
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literals_embed_exactly_for_f32_and_f64() {
        assert_eq!(<f64 as Real>::lit(0.5), 0.5);
        assert_eq!(<f32 as Real>::lit(0.5), 0.5f32);
        assert_eq!(<f64 as Real>::from_count(64), 64.0);
    }

    #[test]
    fn pi_is_available_through_the_trait() {
        fn tau<S: Real>() -> S {
            S::PI() + S::PI()
        }
        assert_eq!(tau::<f64>(), core::f64::consts::TAU);
    }
}
