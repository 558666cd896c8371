//! Field abstraction shared by the whole kernel.
//!
//! Every geometric object is generic over a [`Scalar`]. Two implementations
//! exist: `f64` (tolerance-based comparisons) and [`Rational`] (exact
//! arbitrary-precision rationals). A computation never mixes the two; the
//! type parameter is the kernel-wide arithmetic mode.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// Exact rational number.
pub type Rational = BigRational;

/// Relative tolerance used by float-mode predicates.
pub const FLOAT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArithmeticMode {
    Float,
    Exact,
}

impl fmt::Display for ArithmeticMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArithmeticMode::Float => f.write_str("float"),
            ArithmeticMode::Exact => f.write_str("exact"),
        }
    }
}

pub trait Scalar:
    Clone + fmt::Debug + fmt::Display + PartialOrd + Send + Sync + 'static + Num + Signed
{
    const MODE: ArithmeticMode;

    /// Conversion from a double. Exact for [`Rational`].
    fn from_f64(x: f64) -> Self;

    fn from_i64(x: i64) -> Self;

    fn to_f64(&self) -> f64;

    /// Sign of `self` where magnitudes below `FLOAT_TOL * scale` count as zero
    /// in float mode. Exact mode ignores `scale`.
    fn sign_tol(&self, scale: f64) -> Ordering;

    /// Square root when it is representable in this field.
    fn sqrt_exact(&self) -> Option<Self>;

    /// Parses a decimal, float or `p/q` literal.
    fn parse_literal(s: &str) -> Option<Self>;

    /// JSON encoding: numbers for floats, `"p/q"` strings for rationals.
    fn to_json(&self) -> serde_json::Value;

    /// Appends a stable, exact textual key (used for memoization).
    fn write_key(&self, out: &mut String);

    /// Natural log of `|self|`, accurate even when `to_f64` would overflow.
    fn ln_abs(&self) -> f64 {
        self.to_f64().abs().ln()
    }

    fn from_ratio(p: i64, q: i64) -> Self {
        Self::from_i64(p) / Self::from_i64(q)
    }

    fn is_zero_tol(&self, scale: f64) -> bool {
        self.sign_tol(scale) == Ordering::Equal
    }

    /// Total order used for canonical sorting.
    fn total_cmp(&self, other: &Self) -> Ordering {
        self.partial_cmp(other).unwrap_or(Ordering::Equal)
    }
}

impl Scalar for f64 {
    const MODE: ArithmeticMode = ArithmeticMode::Float;

    fn from_f64(x: f64) -> Self {
        x
    }

    fn from_i64(x: i64) -> Self {
        x as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn sign_tol(&self, scale: f64) -> Ordering {
        let t = FLOAT_TOL * scale.abs().max(f64::MIN_POSITIVE);
        if *self > t {
            Ordering::Greater
        } else if *self < -t {
            Ordering::Less
        } else {
            Ordering::Equal
        }
    }

    fn sqrt_exact(&self) -> Option<Self> {
        if *self < 0.0 {
            None
        } else {
            Some(self.sqrt())
        }
    }

    fn parse_literal(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Some((p, q)) = s.split_once('/') {
            let p: f64 = p.trim().parse().ok()?;
            let q: f64 = q.trim().parse().ok()?;
            if q == 0.0 {
                return None;
            }
            return Some(p / q);
        }
        s.parse().ok()
    }

    fn to_json(&self) -> serde_json::Value {
        serde_json::Number::from_f64(*self)
            .map(serde_json::Value::Number)
            .unwrap_or(serde_json::Value::Null)
    }

    fn write_key(&self, out: &mut String) {
        // bit pattern is exact; normalize -0.0
        let v = if *self == 0.0 { 0.0f64 } else { *self };
        out.push_str(&format!("{:016x}", v.to_bits()));
    }

    fn total_cmp(&self, other: &Self) -> Ordering {
        f64::total_cmp(self, other)
    }
}

impl Scalar for Rational {
    const MODE: ArithmeticMode = ArithmeticMode::Exact;

    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).unwrap_or_else(Zero::zero)
    }

    fn from_i64(x: i64) -> Self {
        BigRational::from_integer(BigInt::from(x))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or_else(|| {
            // huge numerators/denominators: go through the logarithm of each part
            let n = self.numer().to_f64().unwrap_or(f64::INFINITY);
            let d = self.denom().to_f64().unwrap_or(f64::INFINITY);
            n / d
        })
    }

    fn ln_abs(&self) -> f64 {
        fn ln_big(x: &BigInt) -> f64 {
            let bits = x.bits();
            if bits <= 1000 {
                return x.to_f64().unwrap_or(f64::INFINITY).abs().ln();
            }
            let shift = bits - 64;
            let top = (x.abs() >> shift).to_f64().unwrap_or(f64::INFINITY);
            top.ln() + shift as f64 * std::f64::consts::LN_2
        }
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        ln_big(self.numer()) - ln_big(self.denom())
    }

    fn sign_tol(&self, _scale: f64) -> Ordering {
        if self.is_positive() {
            Ordering::Greater
        } else if self.is_negative() {
            Ordering::Less
        } else {
            Ordering::Equal
        }
    }

    fn sqrt_exact(&self) -> Option<Self> {
        if self.is_negative() {
            return None;
        }
        let n = self.numer().sqrt();
        let d = self.denom().sqrt();
        if &(&n * &n) == self.numer() && &(&d * &d) == self.denom() {
            Some(BigRational::new(n, d))
        } else {
            None
        }
    }

    fn parse_literal(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Some((p, q)) = s.split_once('/') {
            let p = BigInt::from_str(p.trim()).ok()?;
            let q = BigInt::from_str(q.trim()).ok()?;
            if q.is_zero() {
                return None;
            }
            return Some(BigRational::new(p, q));
        }
        if let Ok(i) = BigInt::from_str(s) {
            return Some(BigRational::from_integer(i));
        }
        parse_decimal(s)
    }

    fn to_json(&self) -> serde_json::Value {
        if self.denom().is_one() {
            serde_json::Value::String(self.numer().to_string())
        } else {
            serde_json::Value::String(format!("{}/{}", self.numer(), self.denom()))
        }
    }

    fn write_key(&self, out: &mut String) {
        out.push_str(&self.numer().to_string());
        out.push('/');
        out.push_str(&self.denom().to_string());
    }
}

/// Exact parse of a plain decimal literal such as `-1.25` or `3e-2`.
fn parse_decimal(s: &str) -> Option<Rational> {
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    let negative = int_part.starts_with('-');
    let digits = format!("{}{}", int_part.trim_start_matches(['-', '+']), frac_part);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let mut value = BigRational::from_integer(BigInt::from_str(&digits).ok()?);
    let scale = exp - frac_part.len() as i32;
    let ten = BigRational::from_integer(BigInt::from(10));
    if scale >= 0 {
        value *= num_traits::pow(ten, scale as usize);
    } else {
        value /= num_traits::pow(ten, (-scale) as usize);
    }
    Some(if negative { -value } else { value })
}

pub(crate) fn factorial<S: Scalar>(k: usize) -> S {
    (1..=k).fold(S::one(), |acc, j| acc * S::from_i64(j as i64))
}

pub(crate) fn binomial<S: Scalar>(n: usize, k: usize) -> S {
    if k > n {
        return S::zero();
    }
    factorial::<S>(n) / (factorial::<S>(k) * factorial::<S>(n - k))
}

pub(crate) fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter()
        .zip(b)
        .fold(S::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

pub(crate) fn sub<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    a.iter().zip(b).map(|(x, y)| x.clone() - y.clone()).collect()
}

pub(crate) fn add<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    a.iter().zip(b).map(|(x, y)| x.clone() + y.clone()).collect()
}

pub(crate) fn scale<S: Scalar>(a: &[S], s: &S) -> Vec<S> {
    a.iter().map(|x| x.clone() * s.clone()).collect()
}

pub(crate) fn lex_cmp<S: Scalar>(a: &[S], b: &[S]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_literals() {
        let r = Rational::parse_literal("3/4").unwrap();
        assert_eq!(r, Rational::from_ratio(3, 4));
        assert_eq!(Rational::parse_literal("-1.25").unwrap(), Rational::from_ratio(-5, 4));
        assert_eq!(Rational::parse_literal("2e-1").unwrap(), Rational::from_ratio(1, 5));
        assert_eq!(Rational::parse_literal("7").unwrap(), Rational::from_i64(7));
        assert!(Rational::parse_literal("1/0").is_none());
        assert!(Rational::parse_literal("abc").is_none());
    }

    #[test]
    fn float_literals() {
        assert_eq!(f64::parse_literal("1/2"), Some(0.5));
        assert_eq!(f64::parse_literal(" 0.25 "), Some(0.25));
    }

    #[test]
    fn exact_sqrt() {
        assert_eq!(Rational::from_ratio(9, 4).sqrt_exact(), Some(Rational::from_ratio(3, 2)));
        assert_eq!(Rational::from_i64(2).sqrt_exact(), None);
    }

    #[test]
    fn float_tolerance_sign() {
        assert_eq!(1e-13f64.sign_tol(1.0), Ordering::Equal);
        assert_eq!(1e-3f64.sign_tol(1.0), Ordering::Greater);
        assert_eq!(Rational::from_ratio(1, 1_000_000_000).sign_tol(1.0), Ordering::Greater);
    }

    #[test]
    fn combinatorics() {
        assert_eq!(factorial::<Rational>(4), Rational::from_i64(24));
        assert_eq!(binomial::<Rational>(4, 2), Rational::from_i64(6));
    }
}
