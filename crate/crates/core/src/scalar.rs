//! Floating-point scalar abstraction for the numeric core (f32 or f64).

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::Float;

/// Scalar type the embedding models, predictors and rankers are generic over.
pub trait Scalar:
    Float
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Default
    + Display
    + Debug
    + Send
    + Sync
    + 'static
{
    fn from_f64(x: f64) -> Self {
        num_traits::NumCast::from(x).expect("f64 -> scalar conversion")
    }

    fn to_f64(self) -> f64 {
        num_traits::NumCast::from(self).expect("scalar -> f64 conversion")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
