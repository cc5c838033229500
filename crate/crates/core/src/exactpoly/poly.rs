//! Univariate polynomials over `Q(sqrt 2)` and sparse multivariate
//! polynomials over `Q`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::number::QSqrt2;
use crate::counting::parse_rational;
use crate::error::{Error, Result};

pub const MAX_DEGREE: usize = 32;

/// Coefficients from the constant term upward; trailing zeros are trimmed, so
/// the zero polynomial has no coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct ExactPoly {
    coeffs: Vec<QSqrt2>,
}

impl ExactPoly {
    pub fn new(coeffs: Vec<QSqrt2>) -> Result<Self> {
        let p = Self::from_coeffs(coeffs);
        match p.degree() {
            Some(d) if d > MAX_DEGREE => Err(Error::DegreeTooHigh(d)),
            _ => Ok(p),
        }
    }

    fn from_coeffs(mut coeffs: Vec<QSqrt2>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn from_rationals(coeffs: &[BigRational]) -> Result<Self> {
        Self::new(coeffs.iter().cloned().map(QSqrt2::rational).collect())
    }

    /// One string per degree, each of the form `a/b + c/d*sqrt2`.
    pub fn from_strs<S: AsRef<str>>(coeffs: &[S]) -> Result<Self> {
        Self::new(coeffs.iter().map(|s| s.as_ref().parse()).collect::<Result<_>>()?)
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: QSqrt2) -> Self {
        Self::from_coeffs(vec![c])
    }

    pub fn one() -> Self {
        Self::constant(QSqrt2::one())
    }

    /// The monomial `x`.
    pub fn x() -> Self {
        Self::from_coeffs(vec![QSqrt2::zero(), QSqrt2::one()])
    }

    /// `(x - r)^m`.
    pub fn root_power(r: &BigRational, m: u32) -> Self {
        let lin = Self::from_coeffs(vec![QSqrt2::rational(-r.clone()), QSqrt2::one()]);
        lin.pow(m)
    }

    pub fn coeffs(&self) -> &[QSqrt2] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> QSqrt2 {
        self.coeffs.get(k).cloned().unwrap_or_default()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() <= 1
    }

    pub fn leading(&self) -> QSqrt2 {
        self.coeffs.last().cloned().unwrap_or_default()
    }

    pub fn is_rational(&self) -> bool {
        self.coeffs.iter().all(QSqrt2::is_rational)
    }

    pub fn scale(&self, k: &QSqrt2) -> Self {
        Self::from_coeffs(self.coeffs.iter().map(|c| c * k).collect())
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut out = Self::one();
        for _ in 0..e {
            out = &out * self;
        }
        out
    }

    pub fn derivative(&self) -> Self {
        Self::from_coeffs(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c.scale(&BigRational::from_integer(BigInt::from(k))))
                .collect(),
        )
    }

    /// Euclidean division; `None` when `d` is zero.
    pub fn div_rem(&self, d: &ExactPoly) -> Option<(ExactPoly, ExactPoly)> {
        let dd = d.degree()?;
        let lead_inv = d.leading().checked_inv()?;
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return Some((Self::zero(), self.clone()));
        }
        let mut quot = vec![QSqrt2::zero(); rem.len() - dd];
        for k in (0..quot.len()).rev() {
            let c = &rem[k + dd] * &lead_inv;
            if !c.is_zero() {
                for (j, dc) in d.coeffs.iter().enumerate() {
                    rem[k + j] = &rem[k + j] - &(&c * dc);
                }
            }
            quot[k] = c;
        }
        rem.truncate(dd);
        Some((Self::from_coeffs(quot), Self::from_coeffs(rem)))
    }

    /// Horner evaluation at a rational point.
    pub fn eval_exact(&self, x: &BigRational) -> QSqrt2 {
        let mut acc = QSqrt2::zero();
        for c in self.coeffs.iter().rev() {
            acc = &acc.scale(x) + c;
        }
        acc
    }

    pub fn eval(&self, x: &QSqrt2) -> QSqrt2 {
        let mut acc = QSqrt2::zero();
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * x) + c;
        }
        acc
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c.to_f64())
    }

    /// `P(x + c)`.
    pub fn shift(&self, c: &BigRational) -> Self {
        let mut out = self.coeffs.clone();
        let n = out.len();
        for i in 0..n {
            for j in (i..n.saturating_sub(1)).rev() {
                let add = out[j + 1].scale(c);
                out[j] = &out[j] + &add;
            }
        }
        Self::from_coeffs(out)
    }
}

impl Add<&ExactPoly> for &ExactPoly {
    type Output = ExactPoly;
    fn add(self, rhs: &ExactPoly) -> ExactPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        ExactPoly::from_coeffs((0..n).map(|k| &self.coeff(k) + &rhs.coeff(k)).collect())
    }
}

impl Sub<&ExactPoly> for &ExactPoly {
    type Output = ExactPoly;
    fn sub(self, rhs: &ExactPoly) -> ExactPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        ExactPoly::from_coeffs((0..n).map(|k| &self.coeff(k) - &rhs.coeff(k)).collect())
    }
}

impl Mul<&ExactPoly> for &ExactPoly {
    type Output = ExactPoly;
    fn mul(self, rhs: &ExactPoly) -> ExactPoly {
        if self.is_zero() || rhs.is_zero() {
            return ExactPoly::zero();
        }
        let mut out = vec![QSqrt2::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] = &out[i + j] + &(a * b);
            }
        }
        ExactPoly::from_coeffs(out)
    }
}

impl Neg for &ExactPoly {
    type Output = ExactPoly;
    fn neg(self) -> ExactPoly {
        ExactPoly::from_coeffs(self.coeffs.iter().map(|c| -c).collect())
    }
}

impl fmt::Display for ExactPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match k {
                0 => write!(f, "({c})")?,
                1 => write!(f, "({c})*x")?,
                _ => write!(f, "({c})*x^{k}")?,
            }
        }
        Ok(())
    }
}

impl Serialize for ExactPoly {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.coeffs.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ExactPoly {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let coeffs = Vec::<QSqrt2>::deserialize(d)?;
        ExactPoly::new(coeffs).map_err(serde::de::Error::custom)
    }
}

/// Sparse polynomial over `Q` in a fixed number of variables.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MultiPoly {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, BigRational>,
}

impl MultiPoly {
    pub fn zero(nvars: usize) -> Self {
        Self {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: BigRational) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        assert!(i < nvars, "variable index out of range");
        let mut e = vec![0; nvars];
        e[i] = 1;
        let mut p = Self::zero(nvars);
        p.add_term(e, BigRational::one());
        p
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs.
    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Vec<u32>, BigRational)>) -> Result<Self> {
        let mut p = Self::zero(nvars);
        for (e, c) in terms {
            if e.len() != nvars {
                return Err(Error::DimensionMismatch(format!(
                    "monomial has {} exponents, expected {nvars}",
                    e.len()
                )));
            }
            p.add_term(e, c);
        }
        Ok(p)
    }

    /// Embeds a rational univariate polynomial as a polynomial in variable `i`.
    pub fn from_univariate(p: &ExactPoly, nvars: usize, i: usize) -> Result<Self> {
        let mut out = Self::zero(nvars);
        for (k, c) in p.coeffs().iter().enumerate() {
            if !c.is_rational() {
                return Err(Error::DimensionMismatch(
                    "multivariate polynomials take rational coefficients".into(),
                ));
            }
            let mut e = vec![0; nvars];
            e[i] = k as u32;
            out.add_term(e, c.rational_part().clone());
        }
        Ok(out)
    }

    fn add_term(&mut self, e: Vec<u32>, c: BigRational) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(e).or_insert_with(BigRational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.retain(|_, v| !v.is_zero());
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &BTreeMap<Vec<u32>, BigRational> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree_in(&self, i: usize) -> u32 {
        self.terms.keys().map(|e| e[i]).max().unwrap_or(0)
    }

    pub fn constant_term(&self) -> BigRational {
        self.terms.get(&vec![0; self.nvars]).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn scale(&self, k: &BigRational) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), c * k);
        }
        out
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut out = Self::constant(self.nvars, BigRational::one());
        for _ in 0..e {
            out = &out * self;
        }
        out
    }

    pub fn derivative(&self, i: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[i] -= 1;
            out.add_term(e2, c * BigRational::from_integer(e[i].into()));
        }
        out
    }

    pub fn eval(&self, x: &[BigRational]) -> BigRational {
        assert_eq!(x.len(), self.nvars, "point has the wrong dimension");
        let mut acc = BigRational::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (xi, &k) in x.iter().zip(e) {
                if k > 0 {
                    t *= num_traits::pow(xi.clone(), k as usize);
                }
            }
            acc += t;
        }
        acc
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        use num_traits::ToPrimitive;
        self.terms
            .iter()
            .map(|(e, c)| {
                let mut t = c.to_f64().unwrap_or(f64::NAN);
                for (xi, &k) in x.iter().zip(e) {
                    t *= xi.powi(k as i32);
                }
                t
            })
            .sum()
    }

    /// `P(x + c)`, shifting one variable at a time with a univariate Taylor
    /// shift on every slice.
    pub fn shift(&self, c: &[BigRational]) -> Self {
        assert_eq!(c.len(), self.nvars, "shift has the wrong dimension");
        let mut cur = self.clone();
        for (i, ci) in c.iter().enumerate() {
            if ci.is_zero() {
                continue;
            }
            let mut slices: BTreeMap<Vec<u32>, Vec<BigRational>> = BTreeMap::new();
            for (e, coef) in &cur.terms {
                let mut rest = e.clone();
                let k = rest[i] as usize;
                rest[i] = 0;
                let slice = slices.entry(rest).or_default();
                if slice.len() <= k {
                    slice.resize(k + 1, BigRational::zero());
                }
                slice[k] = coef.clone();
            }
            let mut next = Self::zero(self.nvars);
            for (rest, mut a) in slices {
                let n = a.len();
                for s in 0..n {
                    for j in (s..n - 1).rev() {
                        let add = &a[j + 1] * ci;
                        a[j] += add;
                    }
                }
                for (k, coef) in a.into_iter().enumerate() {
                    let mut e = rest.clone();
                    e[i] = k as u32;
                    next.add_term(e, coef);
                }
            }
            cur = next;
        }
        cur
    }
}

impl Add<&MultiPoly> for &MultiPoly {
    type Output = MultiPoly;
    fn add(self, rhs: &MultiPoly) -> MultiPoly {
        assert_eq!(self.nvars, rhs.nvars, "variable count mismatch");
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }
}

impl Sub<&MultiPoly> for &MultiPoly {
    type Output = MultiPoly;
    fn sub(self, rhs: &MultiPoly) -> MultiPoly {
        self + &(-rhs)
    }
}

impl Mul<&MultiPoly> for &MultiPoly {
    type Output = MultiPoly;
    fn mul(self, rhs: &MultiPoly) -> MultiPoly {
        assert_eq!(self.nvars, rhs.nvars, "variable count mismatch");
        let mut out = MultiPoly::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let e = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }
}

impl Neg for &MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        self.scale(&-BigRational::one())
    }
}

#[derive(Serialize, Deserialize)]
struct TermDoc {
    exps: Vec<u32>,
    coef: String,
}

#[derive(Serialize, Deserialize)]
struct MultiPolyDoc {
    nvars: usize,
    terms: Vec<TermDoc>,
}

impl Serialize for MultiPoly {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MultiPolyDoc {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| TermDoc {
                    exps: e.clone(),
                    coef: c.to_string(),
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MultiPoly {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = MultiPolyDoc::deserialize(d)?;
        let terms = doc
            .terms
            .into_iter()
            .map(|t| {
                parse_rational(&t.coef)
                    .map(|c| (t.exps, c))
                    .ok_or_else(|| serde::de::Error::custom(format!("bad coefficient `{}`", t.coef)))
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        MultiPoly::from_terms(doc.nvars, terms).map_err(serde::de::Error::custom)
    }
}

/// Is every exponent even (so the monomial is nonnegative everywhere)?
pub(crate) fn all_even(e: &[u32]) -> bool {
    e.iter().all(|k| k % 2 == 0)
}

/// `prod_i r_i^{e_i}` for nonnegative radii.
pub(crate) fn radius_power(r: &[BigRational], e: &[u32]) -> BigRational {
    let mut t = BigRational::one();
    for (ri, &k) in r.iter().zip(e) {
        if k > 0 {
            t *= num_traits::pow(ri.clone(), k as usize);
        }
    }
    t
}

/// Bounds of `sum_e c_e h^e` over `|h_i| <= r_i`, without the constant term.
pub(crate) fn centered_remainder_bounds(
    shifted: &MultiPoly,
    r: &[BigRational],
) -> (BigRational, BigRational) {
    let zero = vec![0; shifted.nvars()];
    let mut lo = BigRational::zero();
    let mut hi = BigRational::zero();
    for (e, c) in shifted.terms() {
        if *e == zero {
            continue;
        }
        let m = c * radius_power(r, e);
        if all_even(e) {
            if m.is_negative() {
                lo += m;
            } else {
                hi += m;
            }
        } else {
            let a = m.abs();
            lo -= &a;
            hi += a;
        }
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactpoly::number::{rat, rat_int};

    fn p(xs: &[i64]) -> ExactPoly {
        ExactPoly::from_rationals(&xs.iter().map(|&x| rat_int(x)).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn eval_examples() {
        let sq = p(&[1, -2, 1]);
        assert!(sq.eval_exact(&rat_int(1)).is_zero());
        let q = p(&[7, 3, 2]);
        assert_eq!(q.eval_exact(&rat_int(0)), QSqrt2::int(7));
        assert_eq!(q.eval_exact(&rat(1, 2)), QSqrt2::frac(9, 1));
    }

    #[test]
    fn division_round_trip() {
        let a = p(&[1, 0, -3, 2, 5]);
        let b = p(&[2, 1, 1]);
        let (q, r) = a.div_rem(&b).unwrap();
        assert_eq!(&(&q * &b) + &r, a);
        assert!(r.degree().unwrap_or(0) < 2);
        assert!(a.div_rem(&ExactPoly::zero()).is_none());
    }

    #[test]
    fn degree_cap() {
        let coeffs = vec![QSqrt2::one(); 34];
        assert_eq!(ExactPoly::new(coeffs), Err(Error::DegreeTooHigh(33)));
    }

    #[test]
    fn shift_matches_evaluation() {
        let a = p(&[3, -1, 0, 2]);
        let s = a.shift(&rat(1, 3));
        for k in -3..4 {
            let x = rat(k, 5);
            assert_eq!(s.eval_exact(&x), a.eval_exact(&(&x + rat(1, 3))));
        }
    }

    #[test]
    fn strings_round_trip() {
        let q = ExactPoly::from_strs(&["-1/2*sqrt2", "1/3 + sqrt2", "0", "1"]).unwrap();
        let json = serde_json::to_string(&q).unwrap();
        let back: ExactPoly = serde_json::from_str(&json).unwrap();
        assert_eq!(q, back);
        assert_eq!(q.degree(), Some(3));
    }

    #[test]
    fn multipoly_shift_and_derivative() {
        let x = MultiPoly::var(2, 0);
        let y = MultiPoly::var(2, 1);
        let f = &(&x.pow(3) * &y) - &y.pow(2).scale(&rat(1, 2));
        let c = [rat(1, 3), rat(-2, 7)];
        let g = f.shift(&c);
        let pt = [rat(2, 5), rat(1, 9)];
        let moved = [&pt[0] + &c[0], &pt[1] + &c[1]];
        assert_eq!(g.eval(&pt), f.eval(&moved));
        let dx = f.derivative(0);
        assert_eq!(dx, (&x.pow(2) * &y).scale(&rat_int(3)));
        let json = serde_json::to_string(&f).unwrap();
        assert_eq!(serde_json::from_str::<MultiPoly>(&json).unwrap(), f);
    }
}
