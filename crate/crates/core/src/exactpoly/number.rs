//! Exact arithmetic in `Q(sqrt 2)`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::counting::parse_rational;
use crate::error::{Error, Result};

/// `a + b sqrt(2)` with rational `a`, `b` kept in lowest terms.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct QSqrt2 {
    a: BigRational,
    b: BigRational,
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

pub fn rat_int(n: i64) -> BigRational {
    BigRational::from_integer(n.into())
}

/// `2^e` as a rational.
pub fn pow2(e: i64) -> BigRational {
    let two = BigInt::from(2);
    if e >= 0 {
        BigRational::from_integer(num_traits::pow(two, e as usize))
    } else {
        BigRational::new(BigInt::one(), num_traits::pow(two, (-e) as usize))
    }
}

/// Rational enclosure `[lo, lo + 2^-bits]` of `sqrt 2`.
pub fn sqrt2_bounds(bits: u32) -> (BigRational, BigRational) {
    let scale = BigInt::one() << (2 * bits as usize);
    let root = (scale * 2u32).sqrt();
    let den = BigInt::one() << bits as usize;
    let lo = BigRational::new(root.clone(), den.clone());
    let hi = BigRational::new(root + 1u32, den);
    (lo, hi)
}

/// Largest multiple of `2^-bits` that is `<= x`.
pub fn floor_dyadic(x: &BigRational, bits: u32) -> BigRational {
    let den = BigInt::one() << bits as usize;
    let scaled = x * BigRational::from_integer(den.clone());
    BigRational::new(scaled.floor().to_integer(), den)
}

/// Smallest multiple of `2^-bits` that is `>= x`.
pub fn ceil_dyadic(x: &BigRational, bits: u32) -> BigRational {
    let den = BigInt::one() << bits as usize;
    let scaled = x * BigRational::from_integer(den.clone());
    BigRational::new(scaled.ceil().to_integer(), den)
}

impl QSqrt2 {
    pub fn new(a: BigRational, b: BigRational) -> Self {
        Self { a, b }
    }

    pub fn rational(a: BigRational) -> Self {
        Self {
            a,
            b: BigRational::zero(),
        }
    }

    pub fn int(n: i64) -> Self {
        Self::rational(rat_int(n))
    }

    pub fn frac(n: i64, d: i64) -> Self {
        Self::rational(rat(n, d))
    }

    pub fn sqrt2() -> Self {
        Self {
            a: BigRational::zero(),
            b: BigRational::one(),
        }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::int(1)
    }

    pub fn rational_part(&self) -> &BigRational {
        &self.a
    }

    pub fn sqrt2_part(&self) -> &BigRational {
        &self.b
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    /// Exact sign in `{-1, 0, 1}`.
    pub fn sign(&self) -> i8 {
        let sa = sign_of(&self.a);
        let sb = sign_of(&self.b);
        if sb == 0 {
            return sa;
        }
        if sa == 0 || sa == sb {
            return sb;
        }
        // opposite signs: |a| vs |b| sqrt 2
        let a2 = &self.a * &self.a;
        let b2 = &self.b * &self.b * BigRational::from_integer(2.into());
        if a2 > b2 {
            sa
        } else {
            sb
        }
    }

    pub fn conjugate(&self) -> Self {
        Self {
            a: self.a.clone(),
            b: -self.b.clone(),
        }
    }

    /// `a^2 - 2 b^2`.
    pub fn norm(&self) -> BigRational {
        &self.a * &self.a - &self.b * &self.b * BigRational::from_integer(2.into())
    }

    pub fn checked_inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let n = self.norm();
        Some(Self {
            a: &self.a / &n,
            b: -(&self.b / &n),
        })
    }

    pub fn abs(&self) -> Self {
        if self.sign() < 0 {
            -self.clone()
        } else {
            self.clone()
        }
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut out = Self::one();
        for _ in 0..e {
            out = &out * self;
        }
        out
    }

    pub fn scale(&self, k: &BigRational) -> Self {
        Self {
            a: &self.a * k,
            b: &self.b * k,
        }
    }

    /// Rational `r <= self`, within `2^-bits |b|` of it.
    pub fn lower_rational(&self, bits: u32) -> BigRational {
        let (lo, hi) = sqrt2_bounds(bits);
        if self.b.is_negative() {
            &self.a + &self.b * hi
        } else {
            &self.a + &self.b * lo
        }
    }

    /// Rational `r >= self`.
    pub fn upper_rational(&self, bits: u32) -> BigRational {
        -(-self.clone()).lower_rational(bits)
    }

    pub fn to_f64(&self) -> f64 {
        self.a.to_f64().unwrap_or(f64::NAN)
            + self.b.to_f64().unwrap_or(f64::NAN) * std::f64::consts::SQRT_2
    }
}

fn sign_of(x: &BigRational) -> i8 {
    match x.numer().sign() {
        Sign::Minus => -1,
        Sign::NoSign => 0,
        Sign::Plus => 1,
    }
}

impl From<BigRational> for QSqrt2 {
    fn from(a: BigRational) -> Self {
        Self::rational(a)
    }
}

impl From<i64> for QSqrt2 {
    fn from(n: i64) -> Self {
        Self::int(n)
    }
}

impl PartialOrd for QSqrt2 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QSqrt2 {
    fn cmp(&self, other: &Self) -> Ordering {
        (self - other).sign().cmp(&0)
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait<QSqrt2> for QSqrt2 {
            type Output = QSqrt2;
            fn $method(self, rhs: QSqrt2) -> QSqrt2 {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&QSqrt2> for QSqrt2 {
            type Output = QSqrt2;
            fn $method(self, rhs: &QSqrt2) -> QSqrt2 {
                (&self).$method(rhs)
            }
        }
        impl $trait<QSqrt2> for &QSqrt2 {
            type Output = QSqrt2;
            fn $method(self, rhs: QSqrt2) -> QSqrt2 {
                self.$method(&rhs)
            }
        }
    };
}

impl Add<&QSqrt2> for &QSqrt2 {
    type Output = QSqrt2;
    fn add(self, rhs: &QSqrt2) -> QSqrt2 {
        QSqrt2 {
            a: &self.a + &rhs.a,
            b: &self.b + &rhs.b,
        }
    }
}

impl Sub<&QSqrt2> for &QSqrt2 {
    type Output = QSqrt2;
    fn sub(self, rhs: &QSqrt2) -> QSqrt2 {
        QSqrt2 {
            a: &self.a - &rhs.a,
            b: &self.b - &rhs.b,
        }
    }
}

impl Mul<&QSqrt2> for &QSqrt2 {
    type Output = QSqrt2;
    fn mul(self, rhs: &QSqrt2) -> QSqrt2 {
        let two = BigRational::from_integer(2.into());
        QSqrt2 {
            a: &self.a * &rhs.a + &self.b * &rhs.b * two,
            b: &self.a * &rhs.b + &self.b * &rhs.a,
        }
    }
}

/// Panics on division by zero, like the rational types it wraps.
impl Div<&QSqrt2> for &QSqrt2 {
    type Output = QSqrt2;
    fn div(self, rhs: &QSqrt2) -> QSqrt2 {
        self * &rhs.checked_inv().expect("division by zero in Q(sqrt 2)")
    }
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl Neg for QSqrt2 {
    type Output = QSqrt2;
    fn neg(self) -> QSqrt2 {
        QSqrt2 {
            a: -self.a,
            b: -self.b,
        }
    }
}

impl Neg for &QSqrt2 {
    type Output = QSqrt2;
    fn neg(self) -> QSqrt2 {
        -(self.clone())
    }
}

impl fmt::Display for QSqrt2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.a.is_zero(), self.b.is_zero()) {
            (_, true) => write!(f, "{}", self.a),
            (true, false) => write!(f, "{}*sqrt2", self.b),
            (false, false) => {
                if self.b.is_negative() {
                    write!(f, "{} - {}*sqrt2", self.a, -self.b.clone())
                } else {
                    write!(f, "{} + {}*sqrt2", self.a, self.b)
                }
            }
        }
    }
}

impl FromStr for QSqrt2 {
    type Err = Error;

    /// Accepts sums of terms such as `a/b`, `c/d*sqrt2`, `sqrt2`, `-sqrt2`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::MalformedDocument(format!("cannot parse `{s}` as a + b*sqrt2"));
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(bad());
        }
        let mut terms = Vec::new();
        let mut start = 0;
        let bytes = compact.as_bytes();
        for i in 1..bytes.len() {
            let prev = bytes[i - 1];
            if (bytes[i] == b'+' || bytes[i] == b'-') && prev != b'e' && prev != b'E' && prev != b'/' {
                terms.push(&compact[start..i]);
                start = i;
            }
        }
        terms.push(&compact[start..]);
        let mut out = QSqrt2::zero();
        for term in terms {
            let (negative, body) = match term.strip_prefix('-') {
                Some(rest) => (true, rest),
                None => (false, term.strip_prefix('+').unwrap_or(term)),
            };
            let value = if let Some(coef) = body.strip_suffix("*sqrt2") {
                QSqrt2::new(BigRational::zero(), parse_rational(coef).ok_or_else(bad)?)
            } else if body == "sqrt2" {
                QSqrt2::sqrt2()
            } else {
                QSqrt2::rational(parse_rational(body).ok_or_else(bad)?)
            };
            out = if negative { out - value } else { out + value };
        }
        Ok(out)
    }
}

impl Serialize for QSqrt2 {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for QSqrt2 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Serde adapter storing a rational as the string `a/b`.
pub mod rat_serde {
    use super::*;

    pub fn serialize<S: Serializer>(x: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&x.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BigRational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).ok_or_else(|| serde::de::Error::custom(format!("bad rational `{s}`")))
    }
}

/// Serde adapter for a list of rationals.
pub mod rat_vec_serde {
    use super::*;

    pub fn serialize<S: Serializer>(xs: &[BigRational], s: S) -> std::result::Result<S::Ok, S::Error> {
        let strs: Vec<String> = xs.iter().map(|x| x.to_string()).collect();
        strs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<BigRational>, D::Error> {
        let strs = Vec::<String>::deserialize(d)?;
        strs.iter()
            .map(|s| parse_rational(s).ok_or_else(|| serde::de::Error::custom(format!("bad rational `{s}`"))))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_examples() {
        assert_eq!(QSqrt2::new(rat_int(3), rat_int(-2)).sign(), 1);
        assert_eq!(QSqrt2::int(-1).sign(), -1);
        assert_eq!(QSqrt2::zero().sign(), 0);
        assert_eq!(QSqrt2::new(rat_int(-3), rat_int(2)).sign(), -1);
        assert_eq!(QSqrt2::new(rat_int(1), rat_int(-1)).sign(), -1);
    }

    #[test]
    fn inverse_and_division() {
        let x = QSqrt2::new(rat(3, 2), rat(-5, 7));
        let inv = x.checked_inv().unwrap();
        assert_eq!(&x * &inv, QSqrt2::one());
        assert!(QSqrt2::zero().checked_inv().is_none());
        assert_eq!(QSqrt2::sqrt2() * QSqrt2::sqrt2(), QSqrt2::int(2));
    }

    #[test]
    fn parse_and_display() {
        let x: QSqrt2 = "1/2 - 3/4*sqrt2".parse().unwrap();
        assert_eq!(x, QSqrt2::new(rat(1, 2), rat(-3, 4)));
        assert_eq!(x.to_string(), "1/2 - 3/4*sqrt2");
        let y: QSqrt2 = x.to_string().parse().unwrap();
        assert_eq!(x, y);
        assert_eq!("sqrt2".parse::<QSqrt2>().unwrap(), QSqrt2::sqrt2());
        assert_eq!("-sqrt2 + 1".parse::<QSqrt2>().unwrap(), QSqrt2::new(rat_int(1), rat_int(-1)));
        assert_eq!("2.5e-1".parse::<QSqrt2>().unwrap(), QSqrt2::frac(1, 4));
        assert!("x".parse::<QSqrt2>().is_err());
    }

    #[test]
    fn rational_bounds_enclose() {
        let x = QSqrt2::new(rat(1, 3), rat(-2, 5));
        let lo = x.lower_rational(40);
        let hi = x.upper_rational(40);
        assert!(QSqrt2::rational(lo.clone()) <= x);
        assert!(QSqrt2::rational(hi.clone()) >= x);
        assert!(&hi - &lo < rat(1, 1_000_000_000));
        let (a, b) = sqrt2_bounds(30);
        assert!(&a * &a < rat_int(2) && &b * &b > rat_int(2));
    }

    #[test]
    fn dyadic_rounding() {
        let x = rat(1, 3);
        assert_eq!(floor_dyadic(&x, 4), rat(5, 16));
        assert_eq!(ceil_dyadic(&x, 4), rat(6, 16));
        assert_eq!(floor_dyadic(&rat(1, 2), 4), rat(1, 2));
    }
}
