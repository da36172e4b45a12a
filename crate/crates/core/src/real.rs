//! Scalar abstraction the numeric core is generic over.
//!
//! Everything in this crate works on any IEEE float that satisfies [`Real`];
//! in practice that means `f32` or `f64`. The double-precision instantiations
//! are the defaults everywhere and are what the CLI uses.

use std::fmt;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar type for logits, probabilities and gradients.
///
/// The bound set is deliberately small: `num_traits::Float` supplies the
/// arithmetic and transcendentals, the conversion traits let us lift literal
/// constants and counts into the scalar type, and the marker bounds keep the
/// types usable across threads.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + fmt::Debug + fmt::Display + Send + Sync + 'static
{
    /// Lifts an `f64` constant into this scalar type.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 constant must convert")
    }

    /// Lifts a count into this scalar type (used for means and rates).
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize must convert to a float")
    }
}

impl<T> Real for T where
    T: Float + FromPrimitive + ToPrimitive + fmt::Debug + fmt::Display + Send + Sync + 'static
{
}

/// Numerically stable logistic function `1 / (1 + e^-x)`.
///
/// The two-branch form never exponentiates a large positive argument, so the
/// result is well defined (0 or 1) even for extreme logits.
pub fn logistic<R: Real>(x: R) -> R {
    if x >= R::zero() {
        R::one() / (R::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (R::one() + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logistic_midpoint_and_symmetry() {
        assert_eq!(logistic(0.0f64), 0.5);
        let x = 1.3f64;
        assert!((logistic(x) + logistic(-x) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn logistic_saturates_without_overflow() {
        assert_eq!(logistic(800.0f64), 1.0);
        assert_eq!(logistic(-800.0f64), 0.0);
        assert!(logistic(800.0f64).is_finite());
    }

    #[test]
    fn logistic_works_in_single_precision() {
        let p: f32 = logistic(2.5f32);
        assert!((p - 0.924_141_8).abs() < 1e-6);
    }
}
