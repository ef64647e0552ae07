//! Exact rational helpers.
//!
//! Probabilities are arbitrary-precision rationals. The canonical text form
//! is `"num/den"` in lowest terms with a positive denominator, always with
//! the slash (`"0/1"`, `"1/1"`).

use alloc::format;
use alloc::string::String;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = num_rational::BigRational;

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

pub fn half() -> Rational {
    ratio(1, 2)
}

pub fn is_probability(p: &Rational) -> bool {
    !p.is_negative() && *p <= Rational::one()
}

/// Canonical `"num/den"` rendering.
pub fn format_rational(value: &Rational) -> String {
    format!("{}/{}", value.numer(), value.denom())
}

/// Parses `"num/den"`, a bare integer, or a finite decimal such as `"0.75"`
/// or `"-1.5"`. The result is always reduced.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let text = text.trim();
    let bad = || Error::Malformed(format!("not a rational number: {text:?}"));
    if let Some((num, den)) = text.split_once('/') {
        let num: BigInt = parse_integer(num).ok_or_else(bad)?;
        let den: BigInt = parse_integer(den).ok_or_else(bad)?;
        if den.is_zero() {
            return Err(Error::Malformed(format!("zero denominator in {text:?}")));
        }
        return Ok(Rational::new(num, den));
    }
    if let Some((whole, frac)) = text.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = whole.starts_with('-');
        let whole_digits = whole.trim_start_matches(['-', '+']);
        if !whole_digits.bytes().all(|c| c.is_ascii_digit()) || whole.len() - whole_digits.len() > 1
        {
            return Err(bad());
        }
        let whole_value = if whole_digits.is_empty() {
            BigInt::zero()
        } else {
            whole_digits.parse::<BigInt>().map_err(|_| bad())?
        };
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        let frac_value: BigInt = frac.parse().map_err(|_| bad())?;
        let magnitude = Rational::new(whole_value * &scale + frac_value, scale);
        return Ok(if negative { -magnitude } else { magnitude });
    }
    parse_integer(text)
        .map(Rational::from_integer)
        .ok_or_else(bad)
}

fn parse_integer(text: &str) -> Option<BigInt> {
    let digits = text.strip_prefix(['-', '+']).unwrap_or(text);
    if digits.is_empty() || !digits.bytes().all(|c| c.is_ascii_digit()) {
        return None;
    }
    text.parse().ok()
}

/// Nearest `f64`; exact for dyadic values that fit.
pub fn to_f64(value: &Rational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// Decimal rational within `1e-12` of `value`.
pub fn from_f64_approx(value: f64) -> Result<Rational> {
    if !value.is_finite() {
        return Err(Error::Domain(format!("non-finite value {value}")));
    }
    const SCALE: i64 = 1_000_000_000_000;
    let scaled = libm::round(value * SCALE as f64);
    let num = BigInt::from(scaled as i128);
    Ok(Rational::new(num, BigInt::from(SCALE)))
}
