//! Floating-point abstraction used by the closed-form pricing code.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Real scalar the analytic formulas are generic over (`f32` or `f64`).
///
/// Beyond `num_traits::Float` the pricing code needs the complementary
/// error function, which is supplied per type by `libm`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    fn erfc(self) -> Self;

    /// Converts an `f64` literal; all constants in the crate are exactly representable
    /// or meant to be rounded.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal converts to every Scalar")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    #[inline]
    fn erfc(self) -> Self {
        libm::erfc(self)
    }
}

impl Scalar for f32 {
    #[inline]
    fn erfc(self) -> Self {
        libm::erfcf(self)
    }
}
