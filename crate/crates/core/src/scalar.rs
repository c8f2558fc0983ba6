//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! The solver is written once against [`Scalar`] and instantiated either with
//! machine floats (`f64`, `f32`) or with exact big rationals. Exact
//! instantiations compare with zero tolerance, which is what the duality and
//! stationarity checks rely on.

use std::fmt::{Debug, Display};

use num::bigint::BigInt;
use num::traits::{FromPrimitive, Num, Signed, ToPrimitive};
use num::{BigRational, Zero};
use serde::{Deserialize, Serialize};

/// Exact rational scalar.
pub type Rational = BigRational;

/// A number as it appears in instance files: an integer, a decimal, or a
/// `"p/q"` string for exact rationals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Literal {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Literal {
    fn as_text(&self) -> String {
        match self {
            Literal::Int(v) => v.to_string(),
            Literal::Float(v) => v.to_string(),
            Literal::Text(s) => s.trim().to_string(),
        }
    }
}

pub trait Scalar:
    Clone + Debug + Display + PartialOrd + Num + Signed + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// True when arithmetic is exact and comparisons need no tolerance.
    const EXACT: bool;

    /// Slack allowed when testing `Ax <= b`.
    fn feasibility_tolerance() -> Self;

    /// Converts a float, exactly for rationals (binary expansion).
    fn from_f64_lossy(v: f64) -> Self;

    fn to_f64_lossy(&self) -> f64;

    fn parse_literal(lit: &Literal) -> Option<Self>;

    fn to_literal(&self) -> Literal;

    /// Square root; rationals go through `f64`, callers only use it for step
    /// sizes and reporting.
    fn sqrt_approx(&self) -> Self {
        Self::from_f64_lossy(self.to_f64_lossy().sqrt())
    }

    fn from_int(v: i64) -> Self {
        Self::from_i64(v).expect("every scalar represents small integers")
    }

    fn half() -> Self {
        Self::one() / (Self::one() + Self::one())
    }

    fn positive_part(&self) -> Self {
        if *self > Self::zero() {
            self.clone()
        } else {
            Self::zero()
        }
    }

    fn is_integral(&self) -> bool;
}

fn parse_float_text(text: &str) -> Option<f64> {
    if let Some((p, q)) = text.split_once('/') {
        let p: f64 = p.trim().parse().ok()?;
        let q: f64 = q.trim().parse().ok()?;
        return (q != 0.0).then(|| p / q);
    }
    text.parse().ok()
}

macro_rules! float_scalar {
    ($t:ty, $tol:expr) => {
        impl Scalar for $t {
            const EXACT: bool = false;

            fn feasibility_tolerance() -> Self {
                $tol
            }

            fn from_f64_lossy(v: f64) -> Self {
                v as $t
            }

            fn to_f64_lossy(&self) -> f64 {
                *self as f64
            }

            fn parse_literal(lit: &Literal) -> Option<Self> {
                let v = match lit {
                    Literal::Int(v) => *v as f64,
                    Literal::Float(v) => *v,
                    Literal::Text(s) => parse_float_text(s.trim())?,
                };
                v.is_finite().then_some(v as $t)
            }

            fn to_literal(&self) -> Literal {
                if self.fract() == 0.0 && self.abs() < 1e15 {
                    Literal::Int(*self as i64)
                } else {
                    Literal::Float(*self as f64)
                }
            }

            fn sqrt_approx(&self) -> Self {
                self.sqrt()
            }

            fn is_integral(&self) -> bool {
                self.fract() == 0.0
            }
        }
    };
}

float_scalar!(f64, 1e-9);
float_scalar!(f32, 1e-5);

fn parse_decimal(text: &str) -> Option<Rational> {
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(i) => (&text[..i], text[i + 1..].parse::<i32>().ok()?),
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
    let all: String = [int_part, frac_part].concat();
    if !all.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let numer = BigInt::parse_bytes(all.as_bytes(), 10)?;
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        Rational::from_integer(numer * num::pow(ten, scale as usize))
    } else {
        Rational::new(numer, num::pow(ten, (-scale) as usize))
    };
    Some(if negative { -value } else { value })
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn feasibility_tolerance() -> Self {
        Rational::zero()
    }

    fn from_f64_lossy(v: f64) -> Self {
        Rational::from_float(v).unwrap_or_else(Rational::zero)
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn parse_literal(lit: &Literal) -> Option<Self> {
        match lit {
            Literal::Int(v) => Some(Rational::from_integer(BigInt::from(*v))),
            other => {
                let text = other.as_text();
                if let Some((p, q)) = text.split_once('/') {
                    let p = parse_decimal(p.trim())?;
                    let q = parse_decimal(q.trim())?;
                    (!q.is_zero()).then(|| p / q)
                } else {
                    parse_decimal(&text)
                }
            }
        }
    }

    fn to_literal(&self) -> Literal {
        if self.is_integer() {
            if let Some(v) = self.numer().to_i64() {
                return Literal::Int(v);
            }
            return Literal::Text(self.numer().to_string());
        }
        Literal::Text(format!("{}/{}", self.numer(), self.denom()))
    }

    fn is_integral(&self) -> bool {
        self.is_integer()
    }
}

/// Euclidean norm squared of a vector.
pub fn norm_sq<S: Scalar>(v: &[S]) -> S {
    v.iter().fold(S::zero(), |acc, x| acc + x.clone() * x.clone())
}

/// Largest absolute entry.
pub fn inf_norm<S: Scalar>(v: &[S]) -> S {
    v.iter().fold(S::zero(), |acc, x| {
        let a = x.abs();
        if a > acc {
            a
        } else {
            acc
        }
    })
}

/// `wᵀx` for a 0/1 vector `x`.
pub fn dot_binary<S: Scalar>(weights: &[S], x: &[bool]) -> S {
    weights
        .iter()
        .zip(x)
        .filter(|(_, &on)| on)
        .fold(S::zero(), |acc, (w, _)| acc + w.clone())
}

/// Squared Hamming distance between two 0/1 vectors, i.e. `‖x - y‖²`.
pub fn hamming(x: &[bool], y: &[bool]) -> usize {
    x.iter().zip(y).filter(|(a, b)| a != b).count()
}
