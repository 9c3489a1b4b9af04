//! Scalar arithmetic in two modes: exact arbitrary-precision rationals and
//! tolerance-based `f64`.
//!
//! Every quantity in this crate (positions, masses, potentials, LP data) is
//! generic over [`Scalar`]. The exact mode is the reference: all arithmetic is
//! closed under `+ - * /` with no rounding and comparisons are exact. Float
//! mode trades exactness for speed on large instances; comparisons go through
//! the mode's tolerances.

use std::cmp::Ordering;
use std::fmt::{Debug, Display};
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact arbitrary-precision rational, the default mode.
pub type Rational = BigRational;

/// Reference-arithmetic bundle: `&S op &S -> S` for the four field operations
/// plus negation. Generic code states `where for<'a> &'a S: RefOps<S>` once
/// instead of spelling the five operator bounds out.
pub trait RefOps<S>:
    Sized
    + Add<Output = S>
    + Sub<Output = S>
    + Mul<Output = S>
    + Div<Output = S>
    + Neg<Output = S>
{
}

impl<T, S> RefOps<S> for T where
    T: Add<Output = S> + Sub<Output = S> + Mul<Output = S> + Div<Output = S> + Neg<Output = S>
{
}

/// Field operations plus the mode-specific comparison rules.
///
/// Implemented by [`Rational`] (exact) and `f64` (approximate). Reference
/// arithmetic (`&a * &b`) is required so hot loops avoid clones.
pub trait Scalar:
    Clone
    + Debug
    + Display
    + PartialEq
    + PartialOrd
    + Zero
    + One
    + Signed
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + 'static
where
    for<'a> &'a Self: RefOps<Self>,
{
    /// True when arithmetic is exact (no rounding anywhere).
    const EXACT: bool;

    fn from_int(n: i64) -> Self;

    /// Exact ratio `num/den`; `den` must be nonzero.
    fn from_ratio(num: i64, den: i64) -> Self;

    fn to_f64(&self) -> f64;

    /// Absolute tolerance for general comparisons: `0` exact, `1e-9` float.
    fn tol() -> Self;

    /// Feasibility tolerance for LP residuals: `0` exact, `1e-8` float.
    fn feas_tol() -> Self;

    /// Duality-gap tolerance: `0` exact, `1e-7` float.
    fn gap_tol() -> Self;

    /// Parses a decimal string (`"1.25"`), a ratio (`"3/4"`), or an integer.
    fn parse_str(s: &str) -> Option<Self>;

    /// A positive factor that makes every value integral when multiplied in
    /// (the lcm of the denominators in exact mode, `1` in float mode).
    /// Solvers use it to keep intermediate arithmetic small.
    fn integral_scale<'a, I: Iterator<Item = &'a Self>>(values: I) -> Self;

    /// Total order for sorting. Panics on NaN, which no invariant-respecting
    /// value contains.
    fn cmp_total(&self, other: &Self) -> Ordering {
        self.partial_cmp(other).expect("non-comparable scalar (NaN)")
    }

    /// `|self| <= tol()`.
    fn is_zero_tol(&self) -> bool {
        self.abs() <= Self::tol()
    }

    /// `|self - other| <= tol()`.
    fn eq_tol(&self, other: &Self) -> bool {
        (self.clone() - other.clone()).is_zero_tol()
    }
}

fn parse_big_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let n = BigInt::from_str(num.trim()).ok()?;
        let d = BigInt::from_str(den.trim()).ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    if let Some((int_part, frac_part)) = s.split_once('.') {
        let negative = int_part.trim_start().starts_with('-');
        let int_val = if int_part == "-" || int_part.is_empty() {
            BigInt::zero()
        } else {
            BigInt::from_str(int_part).ok()?
        };
        if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let frac_val = BigInt::from_str(frac_part).ok()?;
        let scale = BigInt::from(10u32).pow(frac_part.len() as u32);
        let magnitude = int_val.abs() * &scale + frac_val;
        let signed = if negative { -magnitude } else { magnitude };
        return Some(BigRational::new(signed, scale));
    }
    BigInt::from_str(s).ok().map(BigRational::from)
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_int(n: i64) -> Self {
        BigRational::from(BigInt::from(n))
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn tol() -> Self {
        BigRational::zero()
    }

    fn feas_tol() -> Self {
        BigRational::zero()
    }

    fn gap_tol() -> Self {
        BigRational::zero()
    }

    fn parse_str(s: &str) -> Option<Self> {
        parse_big_rational(s)
    }

    fn integral_scale<'a, I: Iterator<Item = &'a Self>>(values: I) -> Self {
        let mut acc = BigInt::one();
        for v in values {
            acc = num_integer::lcm(acc, v.denom().clone());
        }
        BigRational::from(acc)
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_int(n: i64) -> Self {
        n as f64
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        num as f64 / den as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn tol() -> Self {
        1e-9
    }

    fn feas_tol() -> Self {
        1e-8
    }

    fn gap_tol() -> Self {
        1e-7
    }

    fn parse_str(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Some((num, den)) = s.split_once('/') {
            let n = f64::from_str(num.trim()).ok()?;
            let d = f64::from_str(den.trim()).ok()?;
            if d == 0.0 {
                return None;
            }
            return Some(n / d);
        }
        f64::from_str(s).ok().filter(|v| v.is_finite())
    }

    fn integral_scale<'a, I: Iterator<Item = &'a Self>>(_values: I) -> Self {
        1.0
    }
}
