//! Scalar layer: exact rationals for exponents and breakpoints, and the
//! [`Coeff`] trait that lets the symbolic calculus run over exact rationals
//! or over `f32`/`f64`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::Error;

/// Exact rational used for exponents, breakpoints and exact coefficients.
pub type Rational = num_rational::BigRational;

/// Coefficient field of a power-log term.
///
/// The exact implementation (`Rational`) refuses to produce values that
/// leave the field, such as `2^(1/2)` or `ln 3`; the floating
/// implementations always succeed.
pub trait Coeff:
    Clone
    + PartialEq
    + PartialOrd
    + fmt::Debug
    + fmt::Display
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Send
    + Sync
    + 'static
{
    fn from_rational(q: &Rational) -> Self;

    fn to_f64(&self) -> f64;

    /// `base^exp` for `base > 0`, or `None` if the value is not representable.
    fn rational_pow(base: &Rational, exp: &Rational) -> Option<Self>;

    /// `ln(base)` for `base > 0`, or `None` if the value is not representable.
    fn ln_rational(base: &Rational) -> Option<Self>;

    /// Exact rational value of the coefficient, when it has one.
    fn to_rational(&self) -> Option<Rational>;

    fn from_i64(n: i64) -> Self {
        Self::from_rational(&Rational::from_integer(BigInt::from(n)))
    }

    fn abs_value(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }
}

impl Coeff for Rational {
    fn from_rational(q: &Rational) -> Self {
        q.clone()
    }

    fn to_f64(&self) -> f64 {
        rational_to_f64(self)
    }

    fn rational_pow(base: &Rational, exp: &Rational) -> Option<Self> {
        exact_pow(base, exp)
    }

    fn ln_rational(base: &Rational) -> Option<Self> {
        if base.is_one() {
            Some(Rational::zero())
        } else {
            None
        }
    }

    fn to_rational(&self) -> Option<Rational> {
        Some(self.clone())
    }
}

macro_rules! float_coeff {
    ($t:ty) => {
        impl Coeff for $t {
            fn from_rational(q: &Rational) -> Self {
                rational_to_f64(q) as $t
            }

            fn to_f64(&self) -> f64 {
                *self as f64
            }

            fn rational_pow(base: &Rational, exp: &Rational) -> Option<Self> {
                Some(rational_to_f64(base).powf(rational_to_f64(exp)) as $t)
            }

            fn ln_rational(base: &Rational) -> Option<Self> {
                Some(rational_to_f64(base).ln() as $t)
            }

            fn to_rational(&self) -> Option<Rational> {
                Rational::from_float(*self)
            }
        }
    };
}

float_coeff!(f64);
float_coeff!(f32);

pub fn rational_to_f64(q: &Rational) -> f64 {
    match ToPrimitive::to_f64(q) {
        Some(v) if v.is_finite() => v,
        // very large numerator/denominator pairs
        _ => {
            let n = q.numer().to_f64().unwrap_or(f64::NAN);
            let d = q.denom().to_f64().unwrap_or(f64::NAN);
            n / d
        }
    }
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Exact `base^exp` when the result is rational.
pub fn exact_pow(base: &Rational, exp: &Rational) -> Option<Rational> {
    if !base.is_positive() {
        return None;
    }
    if base.is_one() || exp.is_zero() {
        return Some(Rational::one());
    }
    let n = exp.numer().to_i32()?;
    let d = exp.denom().to_u32()?;
    let mut b = base.clone();
    if n < 0 {
        b = b.recip();
    }
    let num = exact_root(b.numer(), d)?;
    let den = exact_root(b.denom(), d)?;
    let root = Rational::new(num, den);
    Some(num_traits::pow(root, n.unsigned_abs() as usize))
}

fn exact_root(n: &BigInt, k: u32) -> Option<BigInt> {
    if k == 1 {
        return Some(n.clone());
    }
    let r = n.nth_root(k);
    if num_traits::pow(r.clone(), k as usize) == *n {
        Some(r)
    } else {
        None
    }
}

/// Parses `"n"`, `"-n/d"` or a finite decimal such as `"0.25"` exactly.
pub fn parse_rational(s: &str) -> Result<Rational, Error> {
    let s = s.trim();
    let bad = || Error::InvalidParameter(format!("not a rational number: {s:?}"));
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        let negative = whole.starts_with('-');
        let whole = whole.trim_start_matches(['-', '+']);
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let whole: BigInt = if whole.is_empty() {
            BigInt::zero()
        } else {
            whole.parse().map_err(|_| bad())?
        };
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        let frac: BigInt = frac.parse().map_err(|_| bad())?;
        let v = Rational::new(whole * &scale + frac, scale);
        return Ok(if negative { -v } else { v });
    }
    let n: BigInt = s.parse().map_err(|_| bad())?;
    Ok(Rational::from_integer(n))
}

/// Rational or `+inf`. Used for Lebesgue exponents and for piece upper ends.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Extended {
    Finite(Rational),
    Infinity,
}

impl Extended {
    pub fn finite(&self) -> Option<&Rational> {
        match self {
            Extended::Finite(q) => Some(q),
            Extended::Infinity => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Extended::Infinity)
    }

    /// `1/self`, with `1/inf = 0`.
    pub fn reciprocal(&self) -> Rational {
        match self {
            Extended::Finite(q) => q.recip(),
            Extended::Infinity => Rational::zero(),
        }
    }

    /// Inverse of [`Extended::reciprocal`]: `0 -> inf`.
    pub fn from_reciprocal(q: &Rational) -> Extended {
        if q.is_zero() {
            Extended::Infinity
        } else {
            Extended::Finite(q.recip())
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Extended::Finite(q) => rational_to_f64(q),
            Extended::Infinity => f64::INFINITY,
        }
    }
}

impl From<Rational> for Extended {
    fn from(q: Rational) -> Self {
        Extended::Finite(q)
    }
}

impl PartialOrd for Extended {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Extended {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Extended::Finite(a), Extended::Finite(b)) => a.cmp(b),
            (Extended::Finite(_), Extended::Infinity) => Ordering::Less,
            (Extended::Infinity, Extended::Finite(_)) => Ordering::Greater,
            (Extended::Infinity, Extended::Infinity) => Ordering::Equal,
        }
    }
}

impl fmt::Display for Extended {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extended::Finite(q) => write!(f, "{q}"),
            Extended::Infinity => f.write_str("inf"),
        }
    }
}

impl FromStr for Extended {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim() {
            "inf" | "Inf" | "infinity" | "∞" => Ok(Extended::Infinity),
            other => parse_rational(other).map(Extended::Finite),
        }
    }
}

/// Serde adapter writing rationals as `"n/d"` strings (`"n"` for integers).
pub mod rational_string {
    use super::{parse_rational, Rational};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(q)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

impl serde::Serialize for Extended {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Extended {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
