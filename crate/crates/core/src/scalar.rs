//! Numeric abstraction shared by every algorithm in the crate.
//!
//! All scheduling math is written against [`Scalar`], so the same code path runs
//! in `f64` for experiments and in exact [`BigRational`] arithmetic for audits and
//! oracle comparisons. Floating-point types compare with an absolute tolerance of
//! [`FLOAT_TOLERANCE`]; exact types compare exactly.

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive, Zero};

/// Absolute comparison tolerance used for floating-point scalars.
pub const FLOAT_TOLERANCE: f64 = 1e-9;

pub trait Scalar:
    Clone + Debug + Display + PartialOrd + Num + Signed + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// `true` when arithmetic is exact (no rounding).
    const EXACT: bool;

    /// Absolute tolerance for `approx_*` comparisons; zero for exact types.
    fn tolerance() -> Self;

    /// Lossless conversion from `f64` where the type allows it (rationals are
    /// exact, `f32` rounds). `None` for non-finite input.
    fn from_f64_value(v: f64) -> Option<Self>;

    fn to_f64_value(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_count(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("usize fits every scalar")
    }

    fn half() -> Self {
        Self::one() / (Self::one() + Self::one())
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn tolerance() -> Self {
        FLOAT_TOLERANCE
    }

    fn from_f64_value(v: f64) -> Option<Self> {
        v.is_finite().then_some(v)
    }
}

impl Scalar for f32 {
    const EXACT: bool = false;

    fn tolerance() -> Self {
        // f32 cannot resolve 1e-9 at the magnitudes we deal with.
        1e-5
    }

    fn from_f64_value(v: f64) -> Option<Self> {
        v.is_finite().then_some(v as f32)
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn tolerance() -> Self {
        BigRational::zero()
    }

    fn from_f64_value(v: f64) -> Option<Self> {
        BigRational::from_float(v)
    }

    fn to_f64_value(&self) -> f64 {
        // ToPrimitive for big ratios can fail on huge parts; fall back to a
        // numerator/denominator split.
        self.to_f64().unwrap_or_else(|| {
            let n = self.numer().to_f64().unwrap_or(f64::NAN);
            let d = self.denom().to_f64().unwrap_or(f64::NAN);
            n / d
        })
    }
}

/// Exact rational from an integer ratio, convenient for fixtures.
pub fn ratio(numer: i64, denom: i64) -> BigRational {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

/// `a <= b` within the scalar tolerance.
pub fn approx_le<S: Scalar>(a: &S, b: &S) -> bool {
    *a <= b.clone() + S::tolerance()
}

/// `|a - b| <= tol`.
pub fn approx_eq<S: Scalar>(a: &S, b: &S) -> bool {
    (a.clone() - b.clone()).abs() <= S::tolerance()
}

/// Largest element, `None` on empty input. Incomparable values (NaN) are skipped.
pub fn max_of<'a, S: Scalar>(values: impl IntoIterator<Item = &'a S>) -> Option<S> {
    let mut best: Option<&S> = None;
    for v in values {
        match best {
            Some(b) if !(v > b) => {}
            _ => best = Some(v),
        }
    }
    best.cloned()
}

pub fn sum_of<'a, S: Scalar>(values: impl IntoIterator<Item = &'a S>) -> S {
    values.into_iter().fold(S::zero(), |acc, v| acc + v.clone())
}

/// Convert between scalar types through `f64` (exact when the target is a
/// rational and the source is a float).
pub fn convert<A: Scalar, B: Scalar>(a: &A) -> Option<B> {
    B::from_f64_value(a.to_f64_value())
}

/// `BigRational` helper used by serializers: an `f64` view with a string form
/// of the exact value when it is not representable.
pub fn describe<S: Scalar>(v: &S) -> String {
    if S::EXACT {
        v.to_string()
    } else {
        format!("{}", v.to_f64_value())
    }
}
