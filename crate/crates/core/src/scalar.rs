//! Complex scalars in two arithmetic modes.
//!
//! Every structure in the crate is generic over [`Scalar`]. Two implementations
//! ship: [`C64`] (binary floating point, comparisons carry a tolerance) and
//! [`CRat`] (pairs of arbitrary-precision rationals, closed arithmetic, no
//! rounding). Real-valued outputs such as n-norms are reported as `f64` in both
//! modes; in exact mode they are computed from exact intermediates and rounded
//! once at the end.

use std::cmp::Ordering;
use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

pub type C64 = Complex<f64>;
pub type CRat = Complex<BigRational>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArithmeticMode {
    Approximate,
    Exact,
}

pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    const MODE: ArithmeticMode;

    fn zero() -> Self;
    fn one() -> Self;
    fn i() -> Self;

    /// Exact mode converts the binary value of each `f64` without rounding.
    fn from_f64(re: f64, im: f64) -> Self;
    fn from_rationals(re: BigRational, im: BigRational) -> Self;

    fn from_real(re: f64) -> Self {
        Self::from_f64(re, 0.0)
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_rationals(
            BigRational::new(BigInt::from(num), BigInt::from(den)),
            BigRational::zero(),
        )
    }

    fn conj(&self) -> Self;
    fn to_c64(&self) -> C64;

    fn abs(&self) -> f64 {
        self.to_c64().norm()
    }

    fn re_f64(&self) -> f64 {
        self.to_c64().re
    }

    /// `|z|` as a scalar; exact in exact mode when `z` is real or imaginary.
    fn abs_scalar(&self) -> Self;

    /// Exact equality with zero.
    fn is_zero(&self) -> bool;

    /// Zero test used by rank and pivot decisions: exact in exact mode,
    /// `|z| <= tol` otherwise.
    fn is_negligible(&self, tol: f64) -> bool {
        match Self::MODE {
            ArithmeticMode::Exact => self.is_zero(),
            ArithmeticMode::Approximate => self.abs() <= tol,
        }
    }

    /// Ordering of the real parts.
    fn real_cmp(&self, other: &Self) -> Ordering;

    fn abs_sq(&self) -> Self {
        self.clone() * self.conj()
    }

    fn to_json(&self) -> ScalarJson;

    fn is_exact() -> bool {
        Self::MODE == ArithmeticMode::Exact
    }
}

impl Scalar for C64 {
    const MODE: ArithmeticMode = ArithmeticMode::Approximate;

    fn zero() -> Self {
        Complex::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex::new(1.0, 0.0)
    }
    fn i() -> Self {
        Complex::new(0.0, 1.0)
    }
    fn from_f64(re: f64, im: f64) -> Self {
        Complex::new(re, im)
    }
    fn from_rationals(re: BigRational, im: BigRational) -> Self {
        Complex::new(rational_to_f64(&re), rational_to_f64(&im))
    }
    fn conj(&self) -> Self {
        Complex::conj(self)
    }
    fn to_c64(&self) -> C64 {
        *self
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn abs_scalar(&self) -> Self {
        Complex::new(self.norm(), 0.0)
    }
    fn real_cmp(&self, other: &Self) -> Ordering {
        self.re.total_cmp(&other.re)
    }
    fn to_json(&self) -> ScalarJson {
        ScalarJson {
            re: JsonReal::Number(self.re),
            im: JsonReal::Number(self.im),
        }
    }
}

impl Scalar for CRat {
    const MODE: ArithmeticMode = ArithmeticMode::Exact;

    fn zero() -> Self {
        Complex::new(BigRational::zero(), BigRational::zero())
    }
    fn one() -> Self {
        Complex::new(BigRational::one(), BigRational::zero())
    }
    fn i() -> Self {
        Complex::new(BigRational::zero(), BigRational::one())
    }
    fn from_f64(re: f64, im: f64) -> Self {
        let conv = |v: f64| BigRational::from_float(v).expect("finite f64 required in exact mode");
        Complex::new(conv(re), conv(im))
    }
    fn from_rationals(re: BigRational, im: BigRational) -> Self {
        Complex::new(re, im)
    }
    fn conj(&self) -> Self {
        Complex::new(self.re.clone(), -self.im.clone())
    }
    fn to_c64(&self) -> C64 {
        Complex::new(rational_to_f64(&self.re), rational_to_f64(&self.im))
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
    fn abs_scalar(&self) -> Self {
        if self.im.is_zero() {
            Complex::new(self.re.abs(), BigRational::zero())
        } else if self.re.is_zero() {
            Complex::new(self.im.abs(), BigRational::zero())
        } else {
            Self::from_f64(Scalar::abs(self), 0.0)
        }
    }
    fn real_cmp(&self, other: &Self) -> Ordering {
        self.re.cmp(&other.re)
    }
    fn to_json(&self) -> ScalarJson {
        ScalarJson {
            re: JsonReal::Text(format_rational(&self.re)),
            im: JsonReal::Text(format_rational(&self.im)),
        }
    }
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    if let Some(v) = r.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    // Numerator and denominator can both overflow f64; scale them down together.
    let num_bits = r.numer().bits() as i64;
    let den_bits = r.denom().bits() as i64;
    let shift = (num_bits.max(den_bits) - 1000).max(0) as usize;
    let n = (r.numer() >> shift).to_f64().unwrap_or(0.0);
    let d = (r.denom() >> shift).to_f64().unwrap_or(f64::INFINITY);
    n / d
}

pub fn format_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `"p/q"`, integers, and decimal literals (with optional exponent)
/// into an exact rational.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    let s = text.trim();
    if s.is_empty() {
        return None;
    }
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(BigRational::new(p, q));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(idx) => (&s[..idx], s[idx + 1..].parse::<i32>().ok()?),
        None => (s, 0),
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
    let all_digits = format!("{int_part}{frac_part}");
    let mut numer: BigInt = all_digits.parse().ok()?;
    if negative {
        numer = -numer;
    }
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        BigRational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    Some(value)
}

/// One real component on the wire: a JSON number or a rational string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JsonReal {
    Number(f64),
    Text(String),
}

impl JsonReal {
    pub fn to_rational(&self) -> Option<BigRational> {
        match self {
            // Shortest round-trip text keeps `0.1` as 1/10 rather than its binary value.
            JsonReal::Number(v) if v.is_finite() => parse_rational(&format!("{v:e}")),
            JsonReal::Number(_) => None,
            JsonReal::Text(s) => parse_rational(s),
        }
    }
}

impl Default for JsonReal {
    fn default() -> Self {
        JsonReal::Number(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarJson {
    pub re: JsonReal,
    #[serde(default)]
    pub im: JsonReal,
}

impl ScalarJson {
    pub fn to_scalar<S: Scalar>(&self) -> Option<S> {
        Some(S::from_rationals(self.re.to_rational()?, self.im.to_rational()?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(p: i64, q: i64) -> BigRational {
        BigRational::new(p.into(), q.into())
    }

    #[test]
    fn parses_rational_forms() {
        assert_eq!(parse_rational("3/4"), Some(rat(3, 4)));
        assert_eq!(parse_rational("-7"), Some(rat(-7, 1)));
        assert_eq!(parse_rational("0.1"), Some(rat(1, 10)));
        assert_eq!(parse_rational("-2.5e-1"), Some(rat(-1, 4)));
        assert_eq!(parse_rational("1e3"), Some(rat(1000, 1)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("abc"), None);
        assert_eq!(parse_rational(""), None);
    }

    #[test]
    fn json_numbers_become_decimal_rationals() {
        let j = JsonReal::Number(0.1);
        assert_eq!(j.to_rational(), Some(rat(1, 10)));
        let s: ScalarJson = serde_json::from_str(r#"{"re": "1/3", "im": -0.5}"#).unwrap();
        let z: CRat = s.to_scalar().unwrap();
        assert_eq!(z, Complex::new(rat(1, 3), rat(-1, 2)));
        let missing_im: ScalarJson = serde_json::from_str(r#"{"re": 2}"#).unwrap();
        let w: C64 = missing_im.to_scalar().unwrap();
        assert_eq!(w, Complex::new(2.0, 0.0));
    }

    #[test]
    fn exact_arithmetic_is_closed() {
        let a = CRat::from_ratio(1, 3);
        let b = CRat::from_ratio(2, 3);
        assert_eq!(a.clone() + b, <CRat as Scalar>::one());
        assert_eq!((a.clone() * CRat::from_ratio(3, 1)), <CRat as Scalar>::one());
        assert!(!a.is_negligible(1.0));
        assert!((C64::from_f64(1e-12, 0.0)).is_negligible(1e-9));
    }

    #[test]
    fn huge_rationals_convert() {
        let big = BigRational::new(
            num_traits::pow(BigInt::from(10), 400) * 3,
            num_traits::pow(BigInt::from(10), 400),
        );
        assert!((rational_to_f64(&big) - 3.0).abs() < 1e-12);
    }
}
