//! Solution-density functionals `T_S(f) = E_{x : Mx = 0} prod_i f(x_i)`.
//!
//! Two routes are provided. [`t_brute`] enumerates the kernel
//! parameterization in exact rational arithmetic; [`t_fourier`] sums
//! `prod_i f^(sum_r lambda_r M_{r,i})` over `lambda in (F_p^n)^m`, which is
//! the same quantity by orthogonality of characters on the row space.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harmonic::{group_size, GroupFunction, Spectrum};
use crate::linsys::LinearSystem;

/// Cap on enumerated terms for both evaluation routes.
pub const ENUMERATION_CAP: f64 = 1e8;

const MEAN_TOL: f64 = 1e-9;
const CHUNKS: usize = 64;

/// Parses `a/b`, a decimal such as `-0.125`, or scientific notation, exactly.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    let s = text.trim();
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().ok()?;
        let den: BigInt = den.trim().parse().ok()?;
        if den.is_zero() {
            return None;
        }
        return Some(BigRational::new(num, den));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
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
    let all: BigInt = format!("0{int_part}{frac_part}").parse().ok()?;
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut value = if scale >= 0 {
        BigRational::from_integer(all * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(all, num_traits::pow(ten, (-scale) as usize))
    };
    if negative {
        value = -value;
    }
    Some(value)
}

/// Exact rational reading of a double through its shortest decimal form.
pub fn decimal_to_rational(v: f64) -> Result<BigRational> {
    if !v.is_finite() {
        return Err(Error::MalformedDocument(format!("non-finite value {v}")));
    }
    parse_rational(&v.to_string())
        .ok_or_else(|| Error::MalformedDocument(format!("cannot read {v} as a decimal")))
}

/// A function on `F_p^n` with exact rational values.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactFunction {
    p: u32,
    n: u32,
    values: Vec<BigRational>,
}

impl ExactFunction {
    pub fn new(p: u32, n: u32, values: Vec<BigRational>) -> Result<Self> {
        let size = group_size(p, n)?;
        if values.len() != size {
            return Err(Error::DimensionMismatch(format!(
                "expected {size} values, got {}",
                values.len()
            )));
        }
        Ok(Self { p, n, values })
    }

    /// Reads each double through its literal decimal expansion.
    pub fn from_decimal(f: &GroupFunction) -> Result<Self> {
        let values = f
            .values()
            .iter()
            .map(|&v| decimal_to_rational(v))
            .collect::<Result<_>>()?;
        Ok(Self {
            p: f.p(),
            n: f.n(),
            values,
        })
    }

    pub fn constant(p: u32, n: u32, value: BigRational) -> Result<Self> {
        let size = group_size(p, n)?;
        Ok(Self {
            p,
            n,
            values: vec![value; size],
        })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn values(&self) -> &[BigRational] {
        &self.values
    }

    pub fn mean(&self) -> BigRational {
        let sum = self
            .values
            .iter()
            .fold(BigRational::zero(), |acc, v| acc + v);
        sum / BigInt::from(self.values.len())
    }

    pub fn complement(&self) -> Self {
        Self {
            p: self.p,
            n: self.n,
            values: self
                .values
                .iter()
                .map(|v| BigRational::one() - v)
                .collect(),
        }
    }

    pub fn to_f64(&self) -> GroupFunction {
        GroupFunction::new(
            self.p,
            self.n,
            self.values.iter().map(rational_to_f64).collect(),
        )
        .expect("sizes already validated")
    }
}

pub fn rational_to_f64(v: &BigRational) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

/// Walks `(F_p^n)^k` in little-endian digit order while maintaining the
/// point indices of `t` linear images. `coeffs[i][j]` is the coefficient of
/// parameter `j` in image `i`.
struct Odometer<'a> {
    p: usize,
    n: usize,
    coeffs: &'a [Vec<u32>],
    digits: Vec<usize>,
    // acc[i * n + c]: coordinate c of image i
    acc: Vec<usize>,
    index: Vec<usize>,
    pow: Vec<usize>,
}

impl<'a> Odometer<'a> {
    fn new(p: u32, n: u32, coeffs: &'a [Vec<u32>], params: usize, start: usize) -> Self {
        let (p, n) = (p as usize, n as usize);
        let pow: Vec<usize> = (0..n).map(|c| p.pow(c as u32)).collect();
        let mut digits = vec![0usize; params * n];
        let mut rest = start;
        for d in digits.iter_mut() {
            *d = rest % p;
            rest /= p;
        }
        let t = coeffs.len();
        let mut acc = vec![0usize; t * n];
        let mut index = vec![0usize; t];
        for i in 0..t {
            for c in 0..n {
                let v: usize = (0..params)
                    .map(|j| coeffs[i][j] as usize * digits[j * n + c])
                    .sum::<usize>()
                    % p;
                acc[i * n + c] = v;
                index[i] += v * pow[c];
            }
        }
        Self {
            p,
            n,
            coeffs,
            digits,
            acc,
            index,
            pow,
        }
    }

    fn indices(&self) -> &[usize] {
        &self.index
    }

    fn step(&mut self) {
        // digit (j, c) sits at position j * n + c
        for pos in 0..self.digits.len() {
            let (j, c) = (pos / self.n, pos % self.n);
            self.digits[pos] += 1;
            for (i, row) in self.coeffs.iter().enumerate() {
                let a = row[j] as usize;
                if a == 0 {
                    continue;
                }
                let slot = &mut self.acc[i * self.n + c];
                let old = *slot;
                let new = (old + a) % self.p;
                *slot = new;
                self.index[i] = self.index[i] + new * self.pow[c] - old * self.pow[c];
            }
            if self.digits[pos] < self.p {
                return;
            }
            self.digits[pos] = 0;
        }
    }
}

fn check_cap(size: f64) -> Result<()> {
    if size > ENUMERATION_CAP {
        return Err(Error::TooLarge {
            size,
            cap: ENUMERATION_CAP,
        });
    }
    Ok(())
}

fn chunk_ranges(total: usize) -> Vec<(usize, usize)> {
    let chunks = CHUNKS.min(total.max(1));
    let base = total / chunks;
    let extra = total % chunks;
    let mut out = Vec::with_capacity(chunks);
    let mut start = 0;
    for k in 0..chunks {
        let len = base + usize::from(k < extra);
        out.push((start, len));
        start += len;
    }
    out
}

/// Exact `T_S(f)` by enumerating all `p^(nD)` kernel points.
pub fn t_brute(system: &LinearSystem, f: &ExactFunction) -> Result<BigRational> {
    let p = system.p();
    if f.p() != p {
        return Err(Error::DimensionMismatch(format!(
            "function over F_{} used with a system over F_{p}",
            f.p()
        )));
    }
    let n = f.n();
    let d = system.dim();
    let size = (p as f64).powi((n as usize * d) as i32);
    check_cap(size)?;
    let total = (p as usize).pow(n * d as u32);

    // common denominator
    let denom = f
        .values
        .iter()
        .fold(BigInt::one(), |l, v| l.lcm(v.denom()));
    let numerators: Vec<BigInt> = f
        .values
        .iter()
        .map(|v| v.numer() * (&denom / v.denom()))
        .collect();
    let t = system.vars();
    let forms = system.kernel_forms();

    let max_abs = numerators
        .iter()
        .map(|v| v.abs())
        .max()
        .unwrap_or_else(BigInt::zero);
    let bits = max_abs.bits() as f64 * t as f64 + (total as f64).log2() + 2.0;
    let sum: BigInt = if bits < 126.0 {
        let small: Vec<i128> = numerators.iter().map(|v| v.to_i128().unwrap()).collect();
        let partial: Vec<i128> = chunk_ranges(total)
            .into_par_iter()
            .map(|(start, len)| {
                let mut odo = Odometer::new(p, n, forms, d, start);
                let mut acc = 0i128;
                for _ in 0..len {
                    let mut prod = 1i128;
                    for &ix in odo.indices() {
                        prod *= small[ix];
                        if prod == 0 {
                            break;
                        }
                    }
                    acc += prod;
                    odo.step();
                }
                acc
            })
            .collect();
        BigInt::from(partial.into_iter().sum::<i128>())
    } else {
        let partial: Vec<BigInt> = chunk_ranges(total)
            .into_par_iter()
            .map(|(start, len)| {
                let mut odo = Odometer::new(p, n, forms, d, start);
                let mut acc = BigInt::zero();
                for _ in 0..len {
                    let mut prod = BigInt::one();
                    for &ix in odo.indices() {
                        if numerators[ix].is_zero() {
                            prod = BigInt::zero();
                            break;
                        }
                        prod *= &numerators[ix];
                    }
                    acc += prod;
                    odo.step();
                }
                acc
            })
            .collect();
        partial.into_iter().sum()
    };
    let scale = BigInt::from(total) * num_traits::pow(denom, t);
    Ok(BigRational::new(sum, scale))
}

/// Floating brute-force evaluation, the same enumeration as [`t_brute`].
pub fn t_brute_f64(system: &LinearSystem, f: &GroupFunction) -> Result<f64> {
    let (p, n, d) = (system.p(), f.n(), system.dim());
    f.check_same_group(p, n)?;
    check_cap((p as f64).powi((n as usize * d) as i32))?;
    let total = (p as usize).pow(n * d as u32);
    let forms = system.kernel_forms();
    let values = f.values();
    let partial: Vec<f64> = chunk_ranges(total)
        .into_par_iter()
        .map(|(start, len)| {
            let mut odo = Odometer::new(p, n, forms, d, start);
            let mut acc = 0.0;
            for _ in 0..len {
                acc += odo.indices().iter().map(|&ix| values[ix]).product::<f64>();
                odo.step();
            }
            acc
        })
        .collect();
    Ok(partial.iter().sum::<f64>() / total as f64)
}

fn transpose(system: &LinearSystem) -> Vec<Vec<u32>> {
    let m = system.rows();
    (0..system.vars())
        .map(|i| (0..m).map(|r| system.matrix()[r][i]).collect())
        .collect()
}

fn row_space_size(system: &LinearSystem, n: u32) -> Result<usize> {
    let size = (system.p() as f64).powi((n as usize * system.rows()) as i32);
    check_cap(size)?;
    Ok((system.p() as usize).pow(n * system.rows() as u32))
}

/// `sum_lambda prod_i s(sum_r lambda_r M_{r,i})` as a complex number.
pub fn t_fourier_spectrum(system: &LinearSystem, spectrum: &Spectrum) -> Result<Complex64> {
    let (p, n) = (spectrum.p(), spectrum.n());
    if p != system.p() {
        return Err(Error::DimensionMismatch("spectrum modulus differs from system".into()));
    }
    let total = row_space_size(system, n)?;
    let columns = transpose(system);
    let m = system.rows();
    let coeffs = spectrum.coeffs();
    let partial: Vec<Complex64> = chunk_ranges(total)
        .into_par_iter()
        .map(|(start, len)| {
            let mut odo = Odometer::new(p, n, &columns, m, start);
            let mut acc = Complex64::new(0.0, 0.0);
            for _ in 0..len {
                let mut prod = Complex64::new(1.0, 0.0);
                for &h in odo.indices() {
                    prod *= coeffs[h];
                }
                acc += prod;
                odo.step();
            }
            acc
        })
        .collect();
    Ok(partial.into_iter().sum())
}

/// `T_S(f)` through the Fourier transform of `f`.
pub fn t_fourier(system: &LinearSystem, f: &GroupFunction) -> Result<f64> {
    row_space_size(system, f.n())?;
    Ok(t_fourier_spectrum(system, &f.dft())?.re)
}

/// `T_S(f)` as the product of `T` over the disjoint blocks of `S`, times
/// `(E f)^k` for the `k` variables that occur in no equation.
pub fn t_product(system: &LinearSystem, f: &GroupFunction) -> Result<f64> {
    let factors = system.factor_disjoint();
    let spectrum = f.dft();
    let mut value = spectrum.get(0).re.powi(factors.free_columns.len() as i32);
    for block in &factors.blocks {
        value *= t_fourier_spectrum(block, &spectrum)?.re;
    }
    Ok(value)
}

/// `T_S(f)` and `G` with `G(x) = p^n dT/df(x)`, sharing one transform.
pub fn t_value_and_gradient(
    system: &LinearSystem,
    f: &GroupFunction,
) -> Result<(f64, GroupFunction)> {
    let (p, n) = (f.p(), f.n());
    if p != system.p() {
        return Err(Error::DimensionMismatch("function modulus differs from system".into()));
    }
    let total = row_space_size(system, n)?;
    let spectrum = f.dft();
    let coeffs = spectrum.coeffs();
    let columns = transpose(system);
    let (m, t) = (system.rows(), system.vars());
    let size = coeffs.len();
    let zero = Complex64::new(0.0, 0.0);
    let partial: Vec<(Complex64, Vec<Complex64>)> = chunk_ranges(total)
        .into_par_iter()
        .map(|(start, len)| {
            let mut odo = Odometer::new(p, n, &columns, m, start);
            let mut value = zero;
            let mut acc = vec![zero; size];
            let mut prefix = vec![zero; t + 1];
            for _ in 0..len {
                let h = odo.indices();
                prefix[0] = Complex64::new(1.0, 0.0);
                for i in 0..t {
                    prefix[i + 1] = prefix[i] * coeffs[h[i]];
                }
                value += prefix[t];
                let mut suffix = Complex64::new(1.0, 0.0);
                for i in (0..t).rev() {
                    acc[h[i]] += prefix[i] * suffix;
                    suffix *= coeffs[h[i]];
                }
                odo.step();
            }
            (value, acc)
        })
        .collect();
    let mut value = zero;
    let mut acc = vec![zero; size];
    for (v, a) in partial {
        value += v;
        for (slot, x) in acc.iter_mut().zip(a) {
            *slot += x;
        }
    }
    // G(x) = sum_h acc(h) e_p(-h.x): inverse transform of the reflection
    let reflected: Vec<Complex64> = (0..size)
        .map(|h| acc[crate::harmonic::neg_index(h, p, n)])
        .collect();
    let grad = Spectrum::new(p, n, reflected)?.idft();
    Ok((value.re, grad))
}

/// `G(x) = sum_i E_{y : psi_i(y) = x} prod_{j != i} f(psi_j(y))`.
pub fn t_gradient(system: &LinearSystem, f: &GroupFunction) -> Result<GroupFunction> {
    Ok(t_value_and_gradient(system, f)?.1)
}

/// The commonness-type properties a colouring can be tested against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Property {
    Common,
    GeometricCommon,
    Alon { l: u64 },
    Sidorenko,
    Prevalence { alpha: f64 },
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Property::Common => write!(f, "common"),
            Property::GeometricCommon => write!(f, "geometric"),
            Property::Alon { l } => write!(f, "alon({l})"),
            Property::Sidorenko => write!(f, "sidorenko"),
            Property::Prevalence { alpha } => write!(f, "prevalence({alpha})"),
        }
    }
}

impl Property {
    /// Builds a property from its CLI name.
    pub fn from_name(name: &str, l: Option<u64>, alpha: Option<f64>) -> Result<Self> {
        match name {
            "common" => Ok(Property::Common),
            "geometric" => Ok(Property::GeometricCommon),
            "alon" => Ok(Property::Alon {
                l: l.ok_or(Error::MissingL)?,
            }),
            "sidorenko" => Ok(Property::Sidorenko),
            "prevalence" => Ok(Property::Prevalence {
                alpha: alpha.ok_or_else(|| {
                    Error::InvalidConfig("prevalence needs --alpha".into())
                })?,
            }),
            other => Err(Error::InvalidConfig(format!("unknown property `{other}`"))),
        }
    }

    pub(crate) fn needs_complement(&self) -> bool {
        matches!(
            self,
            Property::Common | Property::GeometricCommon | Property::Alon { .. }
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    BruteExact,
    Fourier,
}

/// Exact companions of the floating fields of a brute-force report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactDefect {
    pub alpha: String,
    pub t_f: String,
    pub t_1mf: Option<String>,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectReport {
    pub system: String,
    pub property: Property,
    /// Number of variables of the base system.
    pub t: usize,
    pub alpha: f64,
    pub value: f64,
    pub t_f: f64,
    pub t_1mf: Option<f64>,
    pub method: Method,
    /// For the Alon property, `2^l * value`, which stays representable for
    /// large `l`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalized: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<ExactDefect>,
    pub version: String,
    #[serde(default)]
    pub digests: BTreeMap<String, String>,
}

impl DefectReport {
    /// The property formula applied to the stored fields.
    pub fn recompute(&self) -> f64 {
        defect_value(self.property, self.t, self.alpha, self.t_f, self.t_1mf.unwrap_or(0.0))
    }

    pub fn is_violation(&self) -> bool {
        self.value < 0.0
    }
}

/// `a^l * x`, evaluated in logs so large `l` does not underflow early.
fn scaled(a: f64, l: u64, x: f64) -> f64 {
    if l == 0 {
        return x;
    }
    if a == 0.0 || x == 0.0 {
        return 0.0;
    }
    let sign = x.signum();
    sign * (l as f64 * a.ln() + x.abs().ln()).exp()
}

/// The defect of `property` given the two `T` values.
pub fn defect_value(property: Property, t: usize, alpha: f64, t_f: f64, t_1mf: f64) -> f64 {
    let t = t as i32;
    match property {
        Property::Common => t_f + t_1mf - 2f64.powi(1 - t),
        Property::GeometricCommon => t_f * t_1mf - 2f64.powi(-2 * t),
        Property::Alon { l } => {
            scaled(alpha, l, t_f) + scaled(1.0 - alpha, l, t_1mf)
                - (((1 - t) as f64 - l as f64) * std::f64::consts::LN_2).exp()
        }
        Property::Sidorenko => t_f - alpha.powi(t),
        Property::Prevalence { .. } => t_f,
    }
}

/// `2^l` times the Alon defect.
pub fn alon_normalized(t: usize, l: u64, alpha: f64, t_f: f64, t_1mf: f64) -> f64 {
    scaled(2.0 * alpha, l, t_f) + scaled(2.0 * (1.0 - alpha), l, t_1mf) - 2f64.powi(1 - t as i32)
}

fn pow2(e: i64) -> BigRational {
    let two = BigInt::from(2);
    if e >= 0 {
        BigRational::from_integer(num_traits::pow(two, e as usize))
    } else {
        BigRational::new(BigInt::one(), num_traits::pow(two, (-e) as usize))
    }
}

/// Exact defect over the rationals.
pub fn defect_value_exact(
    property: Property,
    t: usize,
    alpha: &BigRational,
    t_f: &BigRational,
    t_1mf: &BigRational,
) -> Result<BigRational> {
    let t = t as i64;
    Ok(match property {
        Property::Common => t_f + t_1mf - pow2(1 - t),
        Property::GeometricCommon => t_f * t_1mf - pow2(-2 * t),
        Property::Alon { l } => {
            let l_usize = usize::try_from(l).map_err(|_| Error::InvalidConfig("l too large".into()))?;
            num_traits::pow(alpha.clone(), l_usize) * t_f
                + num_traits::pow(BigRational::one() - alpha, l_usize) * t_1mf
                - pow2(1 - t - l as i64)
        }
        Property::Sidorenko => t_f - num_traits::pow(alpha.clone(), t as usize),
        Property::Prevalence { .. } => t_f.clone(),
    })
}

fn check_property_input(property: Property, alpha: f64) -> Result<()> {
    if let Property::GeometricCommon = property {
        if (alpha - 0.5).abs() > MEAN_TOL {
            return Err(Error::MeanConstraintViolated(alpha));
        }
    }
    Ok(())
}

/// Defect of `f` through the Fourier route. A negative value certifies a
/// violation at `f`.
pub fn defect(system: &LinearSystem, f: &GroupFunction, property: Property) -> Result<DefectReport> {
    let alpha = f.mean();
    check_property_input(property, alpha)?;
    let t_f = t_product(system, f)?;
    let t_1mf = if property.needs_complement() {
        Some(t_product(system, &f.complement())?)
    } else {
        None
    };
    let t = system.vars();
    let value = defect_value(property, t, alpha, t_f, t_1mf.unwrap_or(0.0));
    let normalized = match property {
        Property::Alon { l } => Some(alon_normalized(t, l, alpha, t_f, t_1mf.unwrap_or(0.0))),
        _ => None,
    };
    Ok(DefectReport {
        system: system.id(),
        property,
        t,
        alpha,
        value,
        t_f,
        t_1mf,
        method: Method::Fourier,
        normalized,
        exact: None,
        version: crate::VERSION.to_string(),
        digests: BTreeMap::new(),
    })
}

/// Defect of `f` by exact enumeration.
pub fn defect_brute(
    system: &LinearSystem,
    f: &ExactFunction,
    property: Property,
) -> Result<DefectReport> {
    let alpha = f.mean();
    let alpha_f = rational_to_f64(&alpha);
    if let Property::GeometricCommon = property {
        if alpha != BigRational::new(1.into(), 2.into()) && (alpha_f - 0.5).abs() > MEAN_TOL {
            return Err(Error::MeanConstraintViolated(alpha_f));
        }
    }
    let t_f = t_brute(system, f)?;
    let t_1mf = if property.needs_complement() {
        Some(t_brute(system, &f.complement())?)
    } else {
        None
    };
    let t = system.vars();
    let value = defect_value_exact(
        property,
        t,
        &alpha,
        &t_f,
        t_1mf.as_ref().unwrap_or(&BigRational::zero()),
    )?;
    let t_f64 = rational_to_f64(&t_f);
    let t_1mf64 = t_1mf.as_ref().map(rational_to_f64);
    let normalized = match property {
        Property::Alon { l } => Some(alon_normalized(t, l, alpha_f, t_f64, t_1mf64.unwrap_or(0.0))),
        _ => None,
    };
    Ok(DefectReport {
        system: system.id(),
        property,
        t,
        alpha: alpha_f,
        value: rational_to_f64(&value),
        t_f: t_f64,
        t_1mf: t_1mf64,
        method: Method::BruteExact,
        normalized,
        exact: Some(ExactDefect {
            alpha: alpha.to_string(),
            t_f: t_f.to_string(),
            t_1mf: t_1mf.map(|v| v.to_string()),
            value: value.to_string(),
        }),
        version: crate::VERSION.to_string(),
        digests: BTreeMap::new(),
    })
}

/// Output of [`alon_witness`].
#[derive(Debug, Clone)]
pub struct AlonWitness {
    /// `f + g`, where `f` is the input or its complement.
    pub function: GroupFunction,
    /// `log sqrt(T(1 - f) / T(f))` for the (possibly swapped) base function.
    pub c: f64,
    /// True when the input was replaced by `1 - f` so that `T(1-f) >= T(f)`.
    pub swapped: bool,
    /// `|S|` with `S = {x : f(x) <= 9/10}`.
    pub support: usize,
    /// Value of `g` on `S`.
    pub bump: f64,
}

/// Smallest `l` accepted by [`alon_witness`] for a given `c`.
pub fn alon_witness_min_l(c: f64) -> u64 {
    ((45.0 * c / 4.0).ceil() as u64).max(1)
}

/// Perturbs a mean-1/2 colouring `f` into `f + g` whose mean is
/// `1/2 + c/(2l)`, where `g` is constant on `{x : f(x) <= 9/10}`.
pub fn alon_witness(f: &GroupFunction, system: &LinearSystem, l: u64) -> Result<AlonWitness> {
    let alpha = f.mean();
    if (alpha - 0.5).abs() > MEAN_TOL {
        return Err(Error::MeanConstraintViolated(alpha));
    }
    let t_f = t_product(system, f)?;
    let t_1mf = t_product(system, &f.complement())?;
    let (base, swapped, low, high) = if t_1mf >= t_f {
        (f.clone(), false, t_f, t_1mf)
    } else {
        (f.complement(), true, t_1mf, t_f)
    };
    if low <= 0.0 {
        return Err(Error::DegenerateT);
    }
    let c = 0.5 * (high / low).ln();
    let min = alon_witness_min_l(c);
    if l < min {
        return Err(Error::LTooSmall { l, min });
    }
    let support = base.values().iter().filter(|&&v| v <= 0.9).count();
    if c == 0.0 {
        return Ok(AlonWitness {
            function: base,
            c,
            swapped,
            support,
            bump: 0.0,
        });
    }
    let bump = base.len() as f64 / support as f64 * c / (2.0 * l as f64);
    let function = base.map(|v| if v <= 0.9 { v + bump } else { v });
    Ok(AlonWitness {
        function,
        c,
        swapped,
        support,
        bump,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn parse_rational_forms() {
        assert_eq!(parse_rational("0.5"), Some(rat(1, 2)));
        assert_eq!(parse_rational("-0.125"), Some(rat(-1, 8)));
        assert_eq!(parse_rational("1/3"), Some(rat(1, 3)));
        assert_eq!(parse_rational("2.5e-1"), Some(rat(1, 4)));
        assert_eq!(parse_rational("3"), Some(rat(3, 1)));
        assert_eq!(parse_rational(".75"), Some(rat(3, 4)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("abc"), None);
        assert_eq!(decimal_to_rational(0.1).unwrap(), rat(1, 10));
        assert_eq!(decimal_to_rational(1e-7).unwrap(), rat(1, 10_000_000));
    }

    #[test]
    fn a4_point_mass_is_one_over_27() {
        let a4 = LinearSystem::preset("a4", 3).unwrap();
        let f = ExactFunction::new(3, 1, vec![rat(1, 1), rat(0, 1), rat(0, 1)]).unwrap();
        assert_eq!(t_brute(&a4, &f).unwrap(), rat(1, 27));
    }

    #[test]
    fn constants_give_powers() {
        for name in ["phi", "a4", "a5", "ap3", "schur"] {
            let s = LinearSystem::preset(name, 3).unwrap();
            let one = ExactFunction::constant(3, 1, rat(1, 1)).unwrap();
            assert_eq!(t_brute(&s, &one).unwrap(), rat(1, 1));
            let alpha = rat(2, 7);
            let c = ExactFunction::constant(3, 1, alpha.clone()).unwrap();
            assert_eq!(
                t_brute(&s, &c).unwrap(),
                num_traits::pow(alpha, s.vars())
            );
        }
    }

    #[test]
    fn cap_is_enforced() {
        let phi = LinearSystem::preset("phi", 31).unwrap();
        let f = ExactFunction::constant(31, 1, rat(1, 2)).unwrap();
        assert!(matches!(t_brute(&phi, &f), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn phi_half_constant_fourier() {
        let phi = LinearSystem::preset("phi", 3).unwrap();
        let f = GroupFunction::constant(3, 2, 0.5).unwrap();
        assert!((t_fourier(&phi, &f).unwrap() - 2f64.powi(-9)).abs() < 1e-12);
        assert!((t_product(&phi, &f).unwrap() - 2f64.powi(-9)).abs() < 1e-12);
    }

    #[test]
    fn a4_and_a5_fourier_expressions() {
        let f = GroupFunction::from_fn(5, 2, |x| ((x[0] * 3 + x[1] * x[1]) % 7) as f64 / 6.0).unwrap();
        let g = f.centered();
        let s = g.dft();
        let a4 = LinearSystem::preset("a4", 5).unwrap();
        let a5 = LinearSystem::preset("a5", 5).unwrap();
        let l4: f64 = s.coeffs().iter().map(|c| c.norm_sqr().powi(2)).sum();
        let l5: Complex64 = s.coeffs().iter().map(|c| c.norm_sqr().powi(2) * c).sum();
        assert!((t_fourier(&a4, &g).unwrap() - l4).abs() < 1e-12);
        assert!(l4 >= 0.0);
        let t5 = t_fourier_spectrum(&a5, &s).unwrap();
        assert!((t5 - l5).norm() < 1e-12);
        assert!(t5.im.abs() < 1e-9);
    }

    #[test]
    fn coset_kills_phi() {
        let phi = LinearSystem::preset("phi", 3).unwrap();
        let f = GroupFunction::coset_indicator(3, 1, 0, 1).unwrap();
        assert!(t_product(&phi, &f).unwrap().abs() < 1e-15);
        let blocks = phi.factor_disjoint().blocks;
        let exact = ExactFunction::from_decimal(&f).unwrap();
        assert_eq!(t_brute(&blocks[1], &exact).unwrap(), BigRational::zero());
        assert!(t_brute(&blocks[0], &exact).unwrap() > BigRational::zero());
    }

    #[test]
    fn gradient_of_constants() {
        let s = LinearSystem::preset("a5", 3).unwrap();
        let f = GroupFunction::constant(3, 2, 0.3).unwrap();
        let g = t_gradient(&s, &f).unwrap();
        let expected = 5.0 * 0.3f64.powi(4);
        assert!(g.values().iter().all(|v| (v - expected).abs() < 1e-12));
        let zero = GroupFunction::constant(3, 2, 0.0).unwrap();
        assert!(t_gradient(&s, &zero).unwrap().values().iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn defect_examples() {
        let phi = LinearSystem::preset("phi", 3).unwrap();
        let half = GroupFunction::constant(3, 1, 0.5).unwrap();
        let r = defect_brute(&phi, &ExactFunction::from_decimal(&half).unwrap(), Property::Common).unwrap();
        assert_eq!(r.exact.as_ref().unwrap().value, "0");
        let r = defect(&phi, &half, Property::Common).unwrap();
        assert!(r.value.abs() < 1e-15);

        let ap3 = LinearSystem::preset("ap3", 3).unwrap();
        let r = defect_brute(
            &ap3,
            &ExactFunction::from_decimal(&half).unwrap(),
            Property::Alon { l: 1 },
        )
        .unwrap();
        assert_eq!(r.exact.unwrap().value, "0");
    }

    #[test]
    fn geometric_needs_half_mean() {
        let phi = LinearSystem::preset("phi", 3).unwrap();
        let f = GroupFunction::constant(3, 1, 0.4).unwrap();
        assert!(matches!(
            defect(&phi, &f, Property::GeometricCommon),
            Err(Error::MeanConstraintViolated(_))
        ));
        assert_eq!(Property::from_name("alon", None, None), Err(Error::MissingL));
    }

    #[test]
    fn witness_symmetric_case_is_identity() {
        let a4 = LinearSystem::preset("a4", 3).unwrap();
        let f = GroupFunction::constant(3, 2, 0.5).unwrap();
        let w = alon_witness(&f, &a4, 1).unwrap();
        assert_eq!(w.c, 0.0);
        assert_eq!(w.function, f);
    }

    #[test]
    fn witness_errors() {
        let phi = LinearSystem::preset("phi", 3).unwrap();
        let skewed = GroupFunction::new(3, 1, vec![0.0, 0.5, 1.0]).unwrap();
        let w = alon_witness(&skewed, &phi, 1000).unwrap();
        assert!(w.c > 0.0);
        let min = alon_witness_min_l(w.c);
        if min > 1 {
            assert!(matches!(
                alon_witness(&skewed, &phi, min - 1),
                Err(Error::LTooSmall { .. })
            ));
        }
        let off = GroupFunction::constant(3, 1, 0.3).unwrap();
        assert!(matches!(
            alon_witness(&off, &phi, 10),
            Err(Error::MeanConstraintViolated(_))
        ));
    }
}
