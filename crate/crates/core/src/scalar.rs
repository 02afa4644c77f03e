//! Numeric traits shared by the whole crate.
//!
//! [`Scalar`] is the minimum needed by dominance tests and exact hypervolume:
//! an ordered field with cheap copies. It is implemented for `f32`, `f64` and
//! the fixed-width rationals so exact code paths can be checked without
//! rounding. [`Real`] adds the transcendental functions needed everywhere else.

use std::cmp::Ordering;
use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_rational::Ratio;
use num_traits::{Float, FromPrimitive, Num, ToPrimitive};

pub trait Scalar: Copy + PartialOrd + Num + Debug + Send + Sync + 'static {
    /// `false` for NaN and infinities; always `true` for rationals.
    fn is_finite_value(self) -> bool;
}

impl Scalar for f32 {
    fn is_finite_value(self) -> bool {
        self.is_finite()
    }
}

impl Scalar for f64 {
    fn is_finite_value(self) -> bool {
        self.is_finite()
    }
}

impl Scalar for Ratio<i64> {
    fn is_finite_value(self) -> bool {
        true
    }
}

impl Scalar for Ratio<i128> {
    fn is_finite_value(self) -> bool {
        true
    }
}

/// Floating point scalar (`f32` or `f64`).
pub trait Real: Scalar + Float + FromPrimitive + ToPrimitive + Display + LowerExp + Sum {
    /// Converts an `f64` literal. Never fails for the float types.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Real for T where T: Scalar + Float + FromPrimitive + ToPrimitive + Display + LowerExp + Sum {}

/// Total order for values already known to be comparable (finite floats, rationals).
pub(crate) fn cmp<S: Scalar>(a: &S, b: &S) -> Ordering {
    a.partial_cmp(b).unwrap_or(Ordering::Equal)
}

pub(crate) fn max<S: Scalar>(a: S, b: S) -> S {
    if b > a {
        b
    } else {
        a
    }
}
