//! Scalar abstractions.
//!
//! [`Field`] is what polynomial arithmetic and exact elimination need;
//! [`Real`] is the floating point type used for the numeric analysis.

use std::fmt::{Debug, Display};
use std::ops::{Add, Div, Mul, Neg, Rem, Sub};

use num_bigint::BigInt;
use num_traits::{Float, FromPrimitive, Num, One, Signed, ToPrimitive, Zero};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

pub type Rational = num_rational::BigRational;

/// Coefficient field: anything with exact-or-approximate `+ - * /`.
pub trait Field: Num + Neg<Output = Self> + Clone + Debug {}

impl<T: Num + Neg<Output = T> + Clone + Debug> Field for T {}

/// Floating point scalar used by the numeric layers (`f32` or `f64`).
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    fn from_rational(r: &Rational) -> Self {
        Self::lit(r.to_f64().unwrap_or(f64::NAN))
    }

    /// Exact rational value of this float. Panics on non-finite input.
    fn to_rational(self) -> Rational {
        let v = self.to_f64().expect("finite");
        Rational::from_float(v).expect("finite value")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// The two-element field, used to cross-check homology ranks in characteristic 2.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Gf2(pub bool);

impl Add for Gf2 {
    type Output = Gf2;
    fn add(self, rhs: Gf2) -> Gf2 {
        Gf2(self.0 ^ rhs.0)
    }
}

impl Sub for Gf2 {
    type Output = Gf2;
    fn sub(self, rhs: Gf2) -> Gf2 {
        Gf2(self.0 ^ rhs.0)
    }
}

impl Mul for Gf2 {
    type Output = Gf2;
    fn mul(self, rhs: Gf2) -> Gf2 {
        Gf2(self.0 & rhs.0)
    }
}

impl Div for Gf2 {
    type Output = Gf2;
    fn div(self, rhs: Gf2) -> Gf2 {
        assert!(rhs.0, "division by zero in GF(2)");
        self
    }
}

impl Rem for Gf2 {
    type Output = Gf2;
    fn rem(self, rhs: Gf2) -> Gf2 {
        assert!(rhs.0, "division by zero in GF(2)");
        Gf2(false)
    }
}

impl Neg for Gf2 {
    type Output = Gf2;
    fn neg(self) -> Gf2 {
        self
    }
}

impl Zero for Gf2 {
    fn zero() -> Self {
        Gf2(false)
    }
    fn is_zero(&self) -> bool {
        !self.0
    }
}

impl One for Gf2 {
    fn one() -> Self {
        Gf2(true)
    }
}

impl Num for Gf2 {
    type FromStrRadixErr = std::num::ParseIntError;
    fn from_str_radix(s: &str, radix: u32) -> std::result::Result<Self, Self::FromStrRadixErr> {
        let v = i64::from_str_radix(s, radix)?;
        Ok(Gf2(v.rem_euclid(2) == 1))
    }
}

/// `k` as an element of any field (repeated doubling, so it is exact mod p too).
pub fn field_from_u64<T: Field>(mut k: u64) -> T {
    let mut acc = T::zero();
    let mut base = T::one();
    while k > 0 {
        if k & 1 == 1 {
            acc = acc + base.clone();
        }
        base = base.clone() + base;
        k >>= 1;
    }
    acc
}

/// Parse `"num/den"`, `"num"`, or a plain decimal like `"-0.125"` into an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let t = text.trim();
    let bad = || Error::InvalidArgument(format!("not a rational number: {text:?}"));
    if t.is_empty() {
        return Err(bad());
    }
    if let Some((num, den)) = t.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| bad())?;
        let den: BigInt = den.trim().parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(Error::InvalidArgument(format!("zero denominator in {text:?}")));
        }
        return Ok(Rational::new(num, den));
    }
    parse_decimal(t).ok_or_else(bad)
}

/// Exact value of a decimal literal (`"12"`, `"-0.1"`, `"3.25e-2"`).
pub fn parse_decimal(text: &str) -> Option<Rational> {
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(pos) => (&text[..pos], text[pos + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all: BigInt = format!("{int_part}{frac_part}0").parse::<BigInt>().ok()? / BigInt::from(10);
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        Rational::from_integer(all * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(all, num_traits::pow(ten, (-scale) as usize))
    };
    Some(if negative { -value } else { value })
}

/// Shortest decimal representation of `x`, read back as an exact rational.
///
/// `0.1_f64` becomes exactly `1/10` rather than the binary expansion.
pub fn rational_from_decimal_f64(x: f64) -> Result<Rational> {
    if !x.is_finite() {
        return Err(Error::InvalidArgument(format!("non-finite value {x}")));
    }
    parse_decimal(&format!("{x}"))
        .ok_or_else(|| Error::InvalidArgument(format!("cannot convert {x} to a rational")))
}

/// `"num/den"` with an explicit denominator, the on-disk coefficient format.
pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Simplest rational (smallest denominator) in the closed interval `[lo, hi]`.
pub fn simplest_between(lo: &Rational, hi: &Rational) -> Rational {
    debug_assert!(lo <= hi);
    if !lo.is_positive() && !hi.is_negative() {
        return Rational::zero();
    }
    if hi.is_negative() {
        return -simplest_between(&-hi.clone(), &-lo.clone());
    }
    let fl = lo.floor();
    if &fl == lo {
        return fl;
    }
    let next = &fl + Rational::one();
    if &next <= hi {
        return next;
    }
    let inner = simplest_between(
        &(Rational::one() / (hi - &fl)),
        &(Rational::one() / (lo - &fl)),
    );
    fl + Rational::one() / inner
}
