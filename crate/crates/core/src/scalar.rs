//! Number types shared by the geometric modules.
//!
//! Every geometric routine is generic over [`Scalar`]. Two implementations
//! exist: `f64` (float mode, tolerance-based predicates) and [`Exact`]
//! (arbitrary-precision rationals, exact predicates). Polygons with rational
//! vertices double into surfaces whose gluing maps are rational, so the exact
//! mode can trace, compare and enumerate without rounding.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Arbitrary-precision rational used by exact mode.
pub type Exact = BigRational;

/// Default length tolerance for float mode.
pub const TAU_LEN: f64 = 1e-9;

pub trait Scalar:
    Clone
    + fmt::Debug
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// True when arithmetic and comparisons are exact.
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(n: i64) -> Self;
    /// Exact conversion of the binary value of `x` (rationals) or identity (floats).
    fn from_f64(x: f64) -> Self;
    fn from_exact(q: &Exact) -> Self;
    fn to_f64(&self) -> f64;
    fn floor(&self) -> Self;

    /// Sign of `self`, treating `|self| <= tol` as zero in float mode.
    /// Exact scalars ignore `tol`.
    fn sign_tol(&self, tol: f64) -> Ordering;

    fn is_zero_tol(&self, tol: f64) -> bool {
        self.sign_tol(tol) == Ordering::Equal
    }

    fn abs(&self) -> Self {
        if self.sign_tol(0.0) == Ordering::Less {
            -self.clone()
        } else {
            self.clone()
        }
    }

    fn min_of(a: Self, b: Self) -> Self {
        if b < a {
            b
        } else {
            a
        }
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }

    fn half(&self) -> Self {
        self.clone() / Self::from_i64(2)
    }

    /// Hashable form; floats are quantized to `1e-7`.
    fn key(&self) -> ScalarKey;

    /// JSON form: numbers for floats, `"p/q"` strings for rationals.
    fn to_json(&self) -> serde_json::Value;
    fn from_json(v: &serde_json::Value) -> Option<Self>;
}

/// Hashable image of a scalar, used to deduplicate developed triangles.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScalarKey {
    Quantized(i64),
    Rational(BigInt, BigInt),
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn key(&self) -> ScalarKey {
        ScalarKey::Quantized((self * 1e7).round() as i64)
    }

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_i64(n: i64) -> Self {
        n as f64
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn from_exact(q: &Exact) -> Self {
        exact_to_f64(q)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn floor(&self) -> Self {
        f64::floor(*self)
    }
    fn to_json(&self) -> serde_json::Value {
        serde_json::json!(*self)
    }
    fn from_json(v: &serde_json::Value) -> Option<Self> {
        match v {
            serde_json::Value::Number(n) => n.as_f64(),
            serde_json::Value::String(s) => parse_exact(s).map(|q| exact_to_f64(&q)),
            _ => None,
        }
    }
    fn sign_tol(&self, tol: f64) -> Ordering {
        if *self > tol {
            Ordering::Greater
        } else if *self < -tol {
            Ordering::Less
        } else {
            Ordering::Equal
        }
    }
}

impl Scalar for Exact {
    const EXACT: bool = true;

    fn key(&self) -> ScalarKey {
        ScalarKey::Rational(self.numer().clone(), self.denom().clone())
    }

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_i64(n: i64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }
    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).expect("finite float")
    }
    fn from_exact(q: &Exact) -> Self {
        q.clone()
    }
    fn to_f64(&self) -> f64 {
        exact_to_f64(self)
    }
    fn floor(&self) -> Self {
        BigRational::floor(self)
    }
    fn to_json(&self) -> serde_json::Value {
        serde_json::Value::String(format_exact(self))
    }
    fn from_json(v: &serde_json::Value) -> Option<Self> {
        match v {
            serde_json::Value::Number(n) => parse_exact(&n.to_string()),
            serde_json::Value::String(s) => parse_exact(s),
            _ => None,
        }
    }
    fn sign_tol(&self, _tol: f64) -> Ordering {
        if self.is_positive() {
            Ordering::Greater
        } else if self.is_negative() {
            Ordering::Less
        } else {
            Ordering::Equal
        }
    }
}

/// Nearest float to a rational, robust to huge numerators and denominators.
pub fn exact_to_f64(q: &Exact) -> f64 {
    if let Some(v) = ToPrimitive::to_f64(q) {
        if v.is_finite() {
            return v;
        }
    }
    // Scale both parts down to keep the division inside the float range.
    let n = q.numer();
    let d = q.denom();
    let shift = n.bits().max(d.bits()).saturating_sub(900) as usize;
    let n = (n >> shift).to_f64().unwrap_or(f64::NAN);
    let d = (d >> shift).to_f64().unwrap_or(f64::NAN);
    n / d
}

/// Parse `"3"`, `"-0.25"`, `"1e-3"`, `"2/7"` into an exact rational.
pub fn parse_exact(text: &str) -> Option<Exact> {
    let t = text.trim();
    if t.is_empty() {
        return None;
    }
    if let Some((num, den)) = t.split_once('/') {
        let n: BigInt = num.trim().parse().ok()?;
        let d: BigInt = den.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    let (mantissa, exponent) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().ok()?),
        None => (t, 0),
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
    let all: String = format!("{int_part}{frac_part}");
    let mut value = BigRational::from_integer(all.parse::<BigInt>().unwrap_or_default());
    let scale = exponent - frac_part.len() as i32;
    let ten = BigRational::from_integer(BigInt::from(10));
    if scale >= 0 {
        for _ in 0..scale {
            value *= ten.clone();
        }
    } else {
        for _ in 0..(-scale) {
            value /= ten.clone();
        }
    }
    Some(if negative { -value } else { value })
}

/// Canonical text form used in JSON: integers as `"3"`, others as `"p/q"`.
pub fn format_exact(q: &Exact) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Best small-denominator fraction `p/q` with `|x - p/q| <= tol`, `q <= max_den`.
pub fn small_fraction(x: f64, max_den: i64, tol: f64) -> Option<(i64, i64)> {
    for q in 1..=max_den {
        let p = (x * q as f64).round();
        if (x - p / q as f64).abs() <= tol {
            return Some((p as i64, q));
        }
    }
    None
}
