//! Numeric carrier abstraction.
//!
//! Every algorithm that does not depend on exact equality is written against
//! [`Scalar`], which is implemented for [`Rational`] (exact, the default for
//! all analysis) and for `f64` (used to guide large linear programs before
//! exact certification). Exact comparison is the contract for `Rational`;
//! `f64` compares with a fixed absolute tolerance.

use std::cmp::Ordering;
use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision rational, always in lowest terms with positive denominator.
pub type Rational = BigRational;

/// Absolute tolerance used by the `f64` implementation.
pub const F64_TOLERANCE: f64 = 1e-9;

pub trait Scalar: Clone + Debug + Display + PartialOrd + Num + Signed + FromPrimitive + Send + Sync + 'static {
    /// Sign of the value; for inexact carriers values within tolerance of zero are `Equal`.
    fn sign_cmp(&self) -> Ordering;

    fn from_rational(r: &Rational) -> Self;

    fn to_f64_lossy(&self) -> f64;

    /// Whether equality and zero tests are exact.
    fn is_exact() -> bool;

    fn is_zero_tol(&self) -> bool {
        self.sign_cmp() == Ordering::Equal
    }

    fn is_positive_tol(&self) -> bool {
        self.sign_cmp() == Ordering::Greater
    }

    fn is_negative_tol(&self) -> bool {
        self.sign_cmp() == Ordering::Less
    }

    /// Tolerance-aware total comparison.
    fn cmp_tol(&self, other: &Self) -> Ordering {
        (self.clone() - other.clone()).sign_cmp()
    }

    fn eq_tol(&self, other: &Self) -> bool {
        self.cmp_tol(other) == Ordering::Equal
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_rational(&Rational::new(BigInt::from(num), BigInt::from(den)))
    }

    fn from_count(n: usize) -> Self {
        Self::from_rational(&Rational::from_integer(BigInt::from(n)))
    }
}

impl Scalar for Rational {
    fn sign_cmp(&self) -> Ordering {
        match self.numer().sign() {
            Sign::Minus => Ordering::Less,
            Sign::NoSign => Ordering::Equal,
            Sign::Plus => Ordering::Greater,
        }
    }

    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }

    fn to_f64_lossy(&self) -> f64 {
        rational_to_f64(self)
    }

    fn is_exact() -> bool {
        true
    }

    fn cmp_tol(&self, other: &Self) -> Ordering {
        self.cmp(other)
    }

    fn eq_tol(&self, other: &Self) -> bool {
        self == other
    }
}

impl Scalar for f64 {
    fn sign_cmp(&self) -> Ordering {
        if self.abs() <= F64_TOLERANCE {
            Ordering::Equal
        } else if *self > 0.0 {
            Ordering::Greater
        } else {
            Ordering::Less
        }
    }

    fn from_rational(r: &Rational) -> Self {
        rational_to_f64(r)
    }

    fn to_f64_lossy(&self) -> f64 {
        *self
    }

    fn is_exact() -> bool {
        false
    }
}

/// Converts without overflowing on huge numerators/denominators.
pub fn rational_to_f64(r: &Rational) -> f64 {
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    // Shift both sides down to ~60 significant bits.
    let nb = r.numer().bits() as i64;
    let db = r.denom().bits() as i64;
    let shift_n = (nb - 60).max(0);
    let shift_d = (db - 60).max(0);
    let n = (r.numer() >> shift_n as usize).to_f64().unwrap_or(0.0);
    let d = (r.denom() >> shift_d as usize).to_f64().unwrap_or(1.0);
    (n / d) * 2f64.powi((shift_n - shift_d) as i32)
}

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Text form: `p/q`, with `/q` omitted when `q = 1`.
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `p/q`, an integer, or a decimal string (converted exactly: `"0.25"` is `1/4`).
/// Scientific notation (`"1.5e-3"`) is accepted as well.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let s = text.trim();
    if s.is_empty() {
        return Err(Error::Parse(format!("empty number {text:?}")));
    }
    if let Some((n, d)) = s.split_once('/') {
        let num = BigInt::from_str(n.trim()).map_err(|_| Error::Parse(format!("bad numerator in {text:?}")))?;
        let den = BigInt::from_str(d.trim()).map_err(|_| Error::Parse(format!("bad denominator in {text:?}")))?;
        if den.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {text:?}")));
        }
        return Ok(Rational::new(num, den));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let exp = s[pos + 1..].parse::<i32>().map_err(|_| Error::Parse(format!("bad exponent in {text:?}")))?;
            (&s[..pos], exp)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty()
        || !int_part.chars().all(|c| c.is_ascii_digit())
        || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return Err(Error::Parse(format!("not a number: {text:?}")));
    }
    let all = format!("{int_part}{frac_part}");
    let mut num = BigInt::from_str_radix(if all.is_empty() { "0" } else { &all }, 10)
        .map_err(|_| Error::Parse(format!("not a number: {text:?}")))?;
    if negative {
        num = -num;
    }
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    Ok(if scale >= 0 {
        Rational::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(num, num_traits::pow(ten, (-scale) as usize))
    })
}

/// Decimal rendering with `digits` fractional digits, rounded half away from zero.
pub fn format_decimal(r: &Rational, digits: usize) -> String {
    let scale = num_traits::pow(BigInt::from(10), digits);
    let scaled = r * Rational::from_integer(scale.clone());
    let rounded = round_half_away(&scaled);
    let negative = rounded.is_negative();
    let abs = rounded.abs();
    let (q, rem) = abs.div_rem(&scale);
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    out.push_str(&q.to_string());
    if digits > 0 {
        out.push('.');
        let frac = rem.to_string();
        out.push_str(&"0".repeat(digits - frac.len()));
        out.push_str(&frac);
    }
    out
}

pub fn round_half_away(r: &Rational) -> BigInt {
    let two = BigInt::from(2);
    let n = r.numer() * &two + if r.is_negative() { -r.denom() } else { r.denom().clone() };
    let d = r.denom() * &two;
    // Truncating division toward zero of (2n ± d) / 2d.
    n / d
}

/// Smallest of a non-empty iterator under the tolerance-aware order.
pub fn min_tol<'a, T: Scalar>(values: impl IntoIterator<Item = &'a T>) -> Option<T> {
    values.into_iter().fold(None, |acc: Option<T>, v| match acc {
        Some(a) if a.cmp_tol(v) != Ordering::Greater => Some(a),
        _ => Some(v.clone()),
    })
}

pub fn max_tol<'a, T: Scalar>(values: impl IntoIterator<Item = &'a T>) -> Option<T> {
    values.into_iter().fold(None, |acc: Option<T>, v| match acc {
        Some(a) if a.cmp_tol(v) != Ordering::Less => Some(a),
        _ => Some(v.clone()),
    })
}

pub fn sum<'a, T: Scalar>(values: impl IntoIterator<Item = &'a T>) -> T {
    values.into_iter().fold(T::zero(), |acc, v| acc + v.clone())
}

/// Serde adapters storing rationals as `"p/q"` strings.
pub mod serde_rational {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        value_to_rational(&v).map_err(serde::de::Error::custom)
    }

    pub fn value_to_rational(v: &serde_json::Value) -> std::result::Result<Rational, String> {
        match v {
            serde_json::Value::String(s) => parse_rational(s).map_err(|e| e.to_string()),
            serde_json::Value::Number(n) => parse_rational(&n.to_string()).map_err(|e| e.to_string()),
            other => Err(format!("expected a number or \"p/q\" string, got {other}")),
        }
    }

    pub mod vec {
        use super::*;
        use serde::ser::SerializeSeq;

        pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(v.len()))?;
            for r in v {
                seq.serialize_element(&format_rational(r))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Rational>, D::Error> {
            let raw = Vec::<serde_json::Value>::deserialize(d)?;
            raw.iter().map(|v| value_to_rational(v).map_err(serde::de::Error::custom)).collect()
        }
    }

    pub mod matrix {
        use super::*;

        pub fn serialize<S: Serializer>(m: &[Vec<Rational>], s: S) -> std::result::Result<S::Ok, S::Error> {
            let rows: Vec<Vec<String>> = m.iter().map(|r| r.iter().map(format_rational).collect()).collect();
            serde::Serialize::serialize(&rows, s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Vec<Rational>>, D::Error> {
            let raw = Vec::<Vec<serde_json::Value>>::deserialize(d)?;
            raw.iter()
                .map(|row| row.iter().map(|v| value_to_rational(v).map_err(serde::de::Error::custom)).collect())
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fraction_decimal_and_integer_forms() {
        assert_eq!(parse_rational("2/3").unwrap(), rat(2, 3));
        assert_eq!(parse_rational("4/6").unwrap(), rat(2, 3));
        assert_eq!(parse_rational("0.25").unwrap(), rat(1, 4));
        assert_eq!(parse_rational("-1.5").unwrap(), rat(-3, 2));
        assert_eq!(parse_rational("7").unwrap(), int(7));
        assert_eq!(parse_rational(".5").unwrap(), rat(1, 2));
        assert_eq!(parse_rational("1e-2").unwrap(), rat(1, 100));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn formats_lowest_terms() {
        assert_eq!(format_rational(&rat(6, 4)), "3/2");
        assert_eq!(format_rational(&rat(-6, 3)), "-2");
        assert_eq!(format_rational(&rat(0, 5)), "0");
        assert_eq!(format_rational(&rat(1, -3)), "-1/3");
    }

    #[test]
    fn decimal_rounding() {
        assert_eq!(format_decimal(&rat(2, 3), 2), "0.67");
        assert_eq!(format_decimal(&rat(-2, 3), 2), "-0.67");
        assert_eq!(format_decimal(&rat(5, 3), 0), "2");
        assert_eq!(format_decimal(&rat(1, 8), 2), "0.13");
    }

    #[test]
    fn huge_rationals_convert_to_f64() {
        let big = num_traits::pow(BigInt::from(10), 400);
        let r = Rational::new(big.clone() * 3, big);
        assert!((rational_to_f64(&r) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn float_tolerance_semantics() {
        assert!(1e-12f64.is_zero_tol());
        assert!(!1e-6f64.is_zero_tol());
        assert!(1.0f64.eq_tol(&(1.0 + 1e-11)));
    }
}
