//! Scalar abstraction shared by the exact (rational) and float code paths.
//!
//! Every algorithm in the crate is generic over [`Scalar`]. Exact mode uses
//! [`Rational`] (arbitrary precision), so sign decisions and equality tests
//! are decided without rounding. Float mode uses `f64` with the fixed
//! thresholds below.

use std::fmt::{Debug, Display};
use std::hash::Hash;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, NumAssign, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// Exact rational number used in exact mode.
pub type Rational = BigRational;

/// Tolerance on row sums of stochastic matrices in float mode.
pub const STOCHASTIC_TOL: f64 = 1e-9;
/// Tolerance on belief mass drift in float mode.
pub const BELIEF_TOL: f64 = 1e-12;
/// Entries at or below this value count as zero in float-mode sign decisions.
pub const POSITIVITY_TOL: f64 = 1e-12;
/// Decimal digits kept when keying float beliefs for deduplication.
pub const KEY_DIGITS: i32 = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NumericMode {
    Exact,
    Float,
}

impl NumericMode {
    pub fn as_str(self) -> &'static str {
        match self {
            NumericMode::Exact => "exact",
            NumericMode::Float => "float",
        }
    }
}

impl std::str::FromStr for NumericMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exact" | "rational" => Ok(NumericMode::Exact),
            "float" | "f64" => Ok(NumericMode::Float),
            other => Err(format!("unknown numeric mode `{other}` (expected exact or float)")),
        }
    }
}

pub trait Scalar:
    Clone + Debug + Display + PartialOrd + NumAssign + Signed + Send + Sync + 'static
{
    const MODE: NumericMode;

    /// Hashable identity used to deduplicate beliefs.
    type Key: Clone + Debug + Eq + Hash + Ord + Send + Sync;

    fn from_ratio(num: i64, den: i64) -> Self;

    /// Parses a decimal (`0.25`, `1e-3`) or rational (`1/4`) literal.
    fn parse_literal(text: &str) -> Result<Self, String>;

    fn to_f64(&self) -> f64;

    /// Strict positivity as used for support patterns.
    fn positive_entry(&self) -> bool;

    /// Equality up to `tol` in float mode; exact equality otherwise.
    fn near(&self, other: &Self, tol: f64) -> bool;

    fn key(&self) -> Self::Key;

    /// Exact mode renders `p/q` strings, float mode renders JSON numbers.
    fn to_json(&self) -> serde_json::Value;

    /// Removes accumulated rounding drift from a probability vector.
    fn renormalize(_weights: &mut [Self]) {}

    fn from_usize(n: usize) -> Self {
        Self::from_ratio(n as i64, 1)
    }

    fn half() -> Self {
        Self::from_ratio(1, 2)
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }

    fn min_of(a: Self, b: Self) -> Self {
        if b < a {
            b
        } else {
            a
        }
    }
}

impl Scalar for f64 {
    const MODE: NumericMode = NumericMode::Float;
    type Key = i64;

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn parse_literal(text: &str) -> Result<Self, String> {
        let text = text.trim();
        if let Some((num, den)) = text.split_once('/') {
            let num: f64 = num.trim().parse().map_err(|_| format!("bad numerator in `{text}`"))?;
            let den: f64 = den.trim().parse().map_err(|_| format!("bad denominator in `{text}`"))?;
            if den == 0.0 {
                return Err(format!("zero denominator in `{text}`"));
            }
            return Ok(num / den);
        }
        let value: f64 = text.parse().map_err(|_| format!("not a number: `{text}`"))?;
        if !value.is_finite() {
            return Err(format!("non-finite number `{text}`"));
        }
        Ok(value)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn positive_entry(&self) -> bool {
        *self > POSITIVITY_TOL
    }

    fn near(&self, other: &Self, tol: f64) -> bool {
        (self - other).abs() <= tol
    }

    fn key(&self) -> i64 {
        let scaled = (self * 10f64.powi(KEY_DIGITS)).round();
        // -0 and 0 must collide
        if scaled == 0.0 {
            0
        } else {
            scaled as i64
        }
    }

    fn to_json(&self) -> serde_json::Value {
        serde_json::Number::from_f64(*self)
            .map(serde_json::Value::Number)
            .unwrap_or(serde_json::Value::Null)
    }

    fn renormalize(weights: &mut [Self]) {
        for w in weights.iter_mut() {
            if *w < 0.0 {
                *w = 0.0;
            }
        }
        let total: f64 = weights.iter().sum();
        if total > 0.0 && (total - 1.0).abs() > 0.0 {
            for w in weights.iter_mut() {
                *w /= total;
            }
        }
    }
}

impl Scalar for Rational {
    const MODE: NumericMode = NumericMode::Exact;
    type Key = Rational;

    fn from_ratio(num: i64, den: i64) -> Self {
        Rational::new(BigInt::from(num), BigInt::from(den))
    }

    fn parse_literal(text: &str) -> Result<Self, String> {
        parse_rational(text)
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn positive_entry(&self) -> bool {
        self.is_positive()
    }

    fn near(&self, other: &Self, _tol: f64) -> bool {
        self == other
    }

    fn key(&self) -> Rational {
        self.clone()
    }

    fn to_json(&self) -> serde_json::Value {
        serde_json::Value::String(format_rational(self))
    }
}

/// Renders integers bare and everything else as `p/q`.
pub fn format_rational(value: &Rational) -> String {
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

/// Exact parse of `p/q`, integer, or decimal (optionally with exponent).
pub fn parse_rational(text: &str) -> Result<Rational, String> {
    let text = text.trim();
    if text.is_empty() {
        return Err("empty number".to_string());
    }
    if let Some((num, den)) = text.split_once('/') {
        let num = parse_rational(num)?;
        let den = parse_rational(den)?;
        if den.is_zero() {
            return Err(format!("zero denominator in `{text}`"));
        }
        return Ok(num / den);
    }
    let (negative, body) = match text.as_bytes()[0] {
        b'-' => (true, &text[1..]),
        b'+' => (false, &text[1..]),
        _ => (false, text),
    };
    let (mantissa, exponent) = match body.find(['e', 'E']) {
        Some(pos) => {
            let exp: i64 = body[pos + 1..]
                .parse()
                .map_err(|_| format!("bad exponent in `{text}`"))?;
            (&body[..pos], exp)
        }
        None => (body, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(format!("not a number: `{text}`"));
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(format!("not a number: `{text}`"));
    }
    let digits = format!("{int_part}{frac_part}");
    let digits: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().map_err(|_| format!("not a number: `{text}`"))?
    };
    let scale = exponent - frac_part.len() as i64;
    if scale.unsigned_abs() > 4096 {
        return Err(format!("exponent out of range in `{text}`"));
    }
    let ten = BigInt::from(10u32);
    let mut value = Rational::from_integer(digits);
    if scale >= 0 {
        value *= Rational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        value /= Rational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Ok(if negative { -value } else { value })
}

/// Exact rational equal to the binary value of `x`.
pub fn rational_from_f64(x: f64) -> Option<Rational> {
    Rational::from_f64(x)
}

pub fn sum<S: Scalar>(values: &[S]) -> S {
    values.iter().fold(S::zero(), |acc, v| acc + v.clone())
}

/// Integer power by repeated multiplication; `exp = 0` gives one.
pub fn powi<S: Scalar>(base: &S, exp: usize) -> S {
    let mut out = S::one();
    for _ in 0..exp {
        out *= base.clone();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_decimals_exactly() {
        assert_eq!(parse_rational("0.9").unwrap(), Rational::from_ratio(9, 10));
        assert_eq!(parse_rational("9/10").unwrap(), Rational::from_ratio(9, 10));
        assert_eq!(parse_rational("-1.25e1").unwrap(), Rational::from_ratio(-25, 2));
        assert_eq!(parse_rational(".5").unwrap(), Rational::from_ratio(1, 2));
        assert_eq!(parse_rational("3").unwrap(), Rational::from_ratio(3, 1));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn float_literals() {
        assert_eq!(f64::parse_literal("1/4").unwrap(), 0.25);
        assert_eq!(f64::parse_literal("0.55").unwrap(), 0.55);
        assert!(f64::parse_literal("inf").is_err());
    }

    #[test]
    fn float_keys_merge_close_values() {
        assert_eq!(0.3f64.key(), (0.1f64 + 0.2).key());
        assert_eq!((-0.0f64).key(), 0.0f64.key());
        assert_ne!(0.3f64.key(), 0.300_000_001f64.key());
    }

    #[test]
    fn rational_rendering() {
        assert_eq!(format_rational(&Rational::from_ratio(9, 10)), "9/10");
        assert_eq!(format_rational(&Rational::from_ratio(4, 2)), "2");
    }

    #[test]
    fn renormalize_float() {
        let mut w = vec![0.5, 0.5 + 1e-10, -1e-15];
        f64::renormalize(&mut w);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(w.iter().all(|x| *x >= 0.0));
    }
}
