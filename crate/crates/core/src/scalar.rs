//! Scalar abstraction for probability mass.

use std::fmt::{Debug, Display};

use num_traits::{FromPrimitive, Num, Signed};

/// Numeric scalar used for probability arithmetic throughout the crate.
///
/// Any signed field-like type from `num-traits` qualifies through the blanket
/// implementation. The crate-level [`Rational`](crate::Rational) alias is the
/// intended instantiation: it keeps every allocation, comparison, and audit
/// exact. Parsing goes through `Num::from_str_radix`, which for rationals
/// accepts both `"3"` and `"3/4"`.
pub trait Scalar: Num + Signed + FromPrimitive + PartialOrd + Clone + Debug + Display {}

impl<T> Scalar for T where T: Num + Signed + FromPrimitive + PartialOrd + Clone + Debug + Display {}

/// Converts a count into a scalar. Infallible for every scalar the crate
/// instantiates; a failing conversion indicates a broken `Scalar` impl.
pub(crate) fn from_count<S: Scalar>(n: usize) -> S {
    S::from_usize(n).expect("count representable as scalar")
}

/// Sums a slice of scalars.
pub(crate) fn total<S: Scalar>(values: &[S]) -> S {
    values.iter().fold(S::zero(), |acc, v| acc + v.clone())
}
