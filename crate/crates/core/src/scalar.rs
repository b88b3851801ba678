//! Scalar types usable as timestamps and constraint bounds.
//!
//! Everything that compares clock values is generic over [`Scalar`]. The exact
//! rational types are the intended default; the float wrappers exist for quick
//! experiments where reproducibility of boundary comparisons does not matter.

use std::fmt::{Debug, Display};
use std::hash::Hash;
use std::ops::{Add, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};
use ordered_float::OrderedFloat;

use crate::error::{Error, Result};

pub trait Scalar:
    Clone
    + Ord
    + Hash
    + Debug
    + Display
    + Zero
    + Add<Output = Self>
    + Sub<Output = Self>
    + Send
    + Sync
    + 'static
{
    /// Parses a decimal (`0.6`, `12`) or fraction (`3/5`) literal.
    fn parse_scalar(text: &str) -> Result<Self>;

    /// Builds the value `numer / denom`. `denom` must be positive.
    fn from_ratio(numer: i64, denom: i64) -> Self;

    /// Text form accepted back by [`Scalar::parse_scalar`].
    fn to_text(&self) -> String;

    fn is_negative_value(&self) -> bool {
        *self < Self::zero()
    }
}

fn invalid(text: &str) -> Error {
    Error::InvalidScalar {
        text: text.to_string(),
    }
}

/// Splits `[-]int[.frac]` into an integer mantissa and a power-of-ten scale.
fn parse_decimal_parts(text: &str) -> Option<(BigInt, u32)> {
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.strip_prefix('+').unwrap_or(text)),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().all(|b| b.is_ascii_digit()) || !frac_part.bytes().all(|b| b.is_ascii_digit())
    {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let digits = if digits.is_empty() { "0".to_string() } else { digits };
    let mut mantissa: BigInt = digits.parse().ok()?;
    if neg {
        mantissa = -mantissa;
    }
    Some((mantissa, frac_part.len() as u32))
}

fn parse_big_rational(text: &str) -> Result<BigRational> {
    let text = text.trim();
    if let Some((num, den)) = text.split_once('/') {
        let num = parse_decimal_parts(num.trim()).ok_or_else(|| invalid(text))?;
        let den = parse_decimal_parts(den.trim()).ok_or_else(|| invalid(text))?;
        let num = BigRational::new(num.0, BigInt::from(10).pow(num.1));
        let den = BigRational::new(den.0, BigInt::from(10).pow(den.1));
        if den.is_zero() {
            return Err(invalid(text));
        }
        return Ok(num / den);
    }
    let (mantissa, scale) = parse_decimal_parts(text).ok_or_else(|| invalid(text))?;
    Ok(BigRational::new(mantissa, BigInt::from(10).pow(scale)))
}

/// Writes a rational as a terminating decimal when possible, otherwise as `p/q`.
fn big_rational_text(value: &BigRational) -> String {
    let denom = value.denom().clone();
    if denom.is_one() {
        return value.numer().to_string();
    }
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let mut rest = denom.clone();
    let (mut twos, mut fives) = (0u32, 0u32);
    while rest.is_even() {
        rest /= &two;
        twos += 1;
    }
    while (&rest % &five).is_zero() {
        rest /= &five;
        fives += 1;
    }
    if !rest.is_one() {
        return format!("{}/{}", value.numer(), value.denom());
    }
    let places = twos.max(fives);
    let scaled = value.numer() * BigInt::from(10).pow(places) / &denom;
    let sign = if scaled.is_negative() { "-" } else { "" };
    let digits = scaled.abs().to_string();
    let places = places as usize;
    let padded = if digits.len() <= places {
        format!("{}{}", "0".repeat(places - digits.len() + 1), digits)
    } else {
        digits
    };
    let split = padded.len() - places;
    format!("{sign}{}.{}", &padded[..split], &padded[split..])
}

impl Scalar for BigRational {
    fn parse_scalar(text: &str) -> Result<Self> {
        parse_big_rational(text)
    }

    fn from_ratio(numer: i64, denom: i64) -> Self {
        BigRational::new(numer.into(), denom.into())
    }

    fn to_text(&self) -> String {
        big_rational_text(self)
    }
}

impl Scalar for Ratio<i64> {
    fn parse_scalar(text: &str) -> Result<Self> {
        let big = parse_big_rational(text)?;
        match (big.numer().to_i64(), big.denom().to_i64()) {
            (Some(n), Some(d)) => Ok(Ratio::new(n, d)),
            _ => Err(invalid(text)),
        }
    }

    fn from_ratio(numer: i64, denom: i64) -> Self {
        Ratio::new(numer, denom)
    }

    fn to_text(&self) -> String {
        big_rational_text(&BigRational::new((*self.numer()).into(), (*self.denom()).into()))
    }
}

macro_rules! float_scalar {
    ($float:ty) => {
        impl Scalar for OrderedFloat<$float> {
            fn parse_scalar(text: &str) -> Result<Self> {
                let text = text.trim();
                let value: $float = match text.split_once('/') {
                    Some((n, d)) => {
                        let n: $float = n.trim().parse().map_err(|_| invalid(text))?;
                        let d: $float = d.trim().parse().map_err(|_| invalid(text))?;
                        if d == 0.0 {
                            return Err(invalid(text));
                        }
                        n / d
                    }
                    None => text.parse().map_err(|_| invalid(text))?,
                };
                if !value.is_finite() {
                    return Err(invalid(text));
                }
                Ok(OrderedFloat(value))
            }

            fn from_ratio(numer: i64, denom: i64) -> Self {
                OrderedFloat(numer as $float / denom as $float)
            }

            fn to_text(&self) -> String {
                self.0.to_string()
            }
        }
    };
}

float_scalar!(f64);
float_scalar!(f32);
