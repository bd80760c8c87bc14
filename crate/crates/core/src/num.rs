//! Scalar traits the numerical layers are generic over.
//!
//! [`Field`] is enough for the reach recursion and admits exact rationals;
//! [`Real`] adds the transcendental functions the likelihood, fitting, and
//! tail computations need (`f32`, `f64`).

use std::fmt::Debug;

use num_traits::{Float, FromPrimitive, Num};

/// Exact or floating-point field arithmetic.
pub trait Field: Num + Clone + Debug + PartialOrd + Send + Sync {}

impl<T: Num + Clone + Debug + PartialOrd + Send + Sync> Field for T {}

/// Floating-point scalar.
pub trait Real: Field + Float + FromPrimitive + Default + Copy + 'static {
    /// Converts an `f64` constant, panicking only on types that cannot hold it.
    #[inline]
    fn c(x: f64) -> Self {
        Self::from_f64(x).expect("constant representable")
    }

    #[inline]
    fn count(n: u64) -> Self {
        Self::from_u64(n).expect("count representable")
    }

    /// `ln(exp(a) + exp(b))` without overflow; `-inf` is the additive identity.
    #[inline]
    fn ln_add_exp(self, other: Self) -> Self {
        let (hi, lo) = if self >= other { (self, other) } else { (other, self) };
        if hi == Self::neg_infinity() {
            return hi;
        }
        hi + (lo - hi).exp().ln_1p()
    }
}

impl<T: Field + Float + FromPrimitive + Default + Copy + 'static> Real for T {}

/// Exact rationals used for symbolic checks of the reach recursion.
pub type Rational = num_rational::Ratio<i64>;
