//! Scalar abstraction shared by every solver in the crate.
//!
//! All algorithms are written against [`Scalar`]. The exact rational types
//! ([`BigRational`], [`Rational64`]) give zero-tolerance results; `f64`/`f32`
//! are accepted for exploratory use, with comparisons relaxed by
//! [`Scalar::tolerance`].

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio, Rational64};
use num_traits::{Num, Signed};

pub trait Scalar:
    Num + Signed + Clone + PartialOrd + Debug + Display + Send + Sync + 'static
{
    /// True when arithmetic on the type never rounds.
    const EXACT: bool;

    /// Builds `numer / denom`. Panics when `denom == 0`.
    fn from_ratio(numer: i64, denom: i64) -> Self;

    /// Slack used when deciding positivity and equality. Zero for exact types.
    fn tolerance() -> Self {
        Self::zero()
    }

    /// `self > tolerance`.
    fn is_positive_tol(&self) -> bool {
        *self > Self::tolerance()
    }

    /// Equality up to [`Scalar::tolerance`], scaled by magnitude for inexact types.
    fn approx_eq(&self, other: &Self) -> bool {
        if Self::EXACT {
            return self == other;
        }
        let diff = (self.clone() - other.clone()).abs();
        let scale = Self::one() + self.abs() + other.abs();
        diff <= Self::tolerance() * scale
    }

    fn min_of(a: &Self, b: &Self) -> Self {
        if a <= b {
            a.clone()
        } else {
            b.clone()
        }
    }

    fn max_of(a: &Self, b: &Self) -> Self {
        if a >= b {
            a.clone()
        } else {
            b.clone()
        }
    }

    fn from_usize(n: usize) -> Self {
        Self::from_ratio(n as i64, 1)
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_ratio(numer: i64, denom: i64) -> Self {
        Ratio::new(BigInt::from(numer), BigInt::from(denom))
    }
}

impl Scalar for Rational64 {
    const EXACT: bool = true;

    fn from_ratio(numer: i64, denom: i64) -> Self {
        Ratio::new(numer, denom)
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_ratio(numer: i64, denom: i64) -> Self {
        assert!(denom != 0, "zero denominator");
        numer as f64 / denom as f64
    }

    fn tolerance() -> Self {
        1e-9
    }
}

impl Scalar for f32 {
    const EXACT: bool = false;

    fn from_ratio(numer: i64, denom: i64) -> Self {
        assert!(denom != 0, "zero denominator");
        numer as f32 / denom as f32
    }

    fn tolerance() -> Self {
        1e-4
    }
}

/// Sum of an iterator of scalars.
pub fn sum<'a, T: Scalar, I: IntoIterator<Item = &'a T>>(items: I) -> T {
    items
        .into_iter()
        .fold(T::zero(), |acc, x| acc + x.clone())
}
