//! Dense real functions on `F_p^n` and the Fourier transform
//! `f^(h) = E_x f(x) e_p(-h.x)` with inversion `f(x) = sum_h f^(h) e_p(h.x)`.
//!
//! Points are indexed little-endian: `x = (x_1, .., x_n)` lives at
//! `sum_i x_i p^(i-1)`.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported `p^n`.
pub const MAX_POINTS: usize = 1 << 24;

const MAGIC: &[u8; 4] = b"GFPN";
const CENTERED_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct GroupFunction {
    p: u32,
    n: u32,
    values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    p: u32,
    n: u32,
    coeffs: Vec<Complex64>,
}

/// JSON form of a function file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FunctionDocument {
    pub p: u32,
    pub n: u32,
    pub values: Vec<f64>,
}

pub(crate) fn group_size(p: u32, n: u32) -> Result<usize> {
    let size = (p as f64).powi(n as i32);
    if n == 0 || size > MAX_POINTS as f64 {
        return Err(Error::TooLarge {
            size,
            cap: MAX_POINTS as f64,
        });
    }
    Ok((p as usize).pow(n))
}

/// Powers of `e_p(1) = exp(2 pi i / p)`.
#[derive(Debug, Clone)]
pub struct RootTable {
    p: u32,
    powers: Vec<Complex64>,
}

impl RootTable {
    pub fn new(p: u32) -> Self {
        let step = 2.0 * std::f64::consts::PI / p as f64;
        let powers = (0..p)
            .map(|k| {
                let a = step * k as f64;
                Complex64::new(a.cos(), a.sin())
            })
            .collect();
        Self { p, powers }
    }

    /// `e_p(k)`.
    #[inline]
    pub fn e(&self, k: u64) -> Complex64 {
        self.powers[(k % self.p as u64) as usize]
    }
}

/// In-place transform along every axis: `out(h) = sum_x in(x) e_p(sign h.x)`.
fn transform(data: &mut [Complex64], p: u32, n: u32, inverse: bool) {
    let roots = RootTable::new(p);
    let p = p as usize;
    let mut line = vec![Complex64::new(0.0, 0.0); p];
    let mut out = vec![Complex64::new(0.0, 0.0); p];
    let mut stride = 1usize;
    for _ in 0..n {
        let block = stride * p;
        for outer in (0..data.len()).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                for (x, slot) in line.iter_mut().enumerate() {
                    *slot = data[base + x * stride];
                }
                for (h, o) in out.iter_mut().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (x, v) in line.iter().enumerate() {
                        let k = (h * x) % p;
                        let k = if inverse { k } else { (p - k) % p };
                        acc += v * roots.e(k as u64);
                    }
                    *o = acc;
                }
                for (h, v) in out.iter().enumerate() {
                    data[base + h * stride] = *v;
                }
            }
        }
        stride = block;
    }
}

impl GroupFunction {
    pub fn new(p: u32, n: u32, values: Vec<f64>) -> Result<Self> {
        let size = group_size(p, n)?;
        if values.len() != size {
            return Err(Error::DimensionMismatch(format!(
                "expected {size} values for p={p}, n={n}, got {}",
                values.len()
            )));
        }
        Ok(Self { p, n, values })
    }

    pub fn constant(p: u32, n: u32, value: f64) -> Result<Self> {
        let size = group_size(p, n)?;
        Ok(Self {
            p,
            n,
            values: vec![value; size],
        })
    }

    /// Builds `f` pointwise from coordinates.
    pub fn from_fn(p: u32, n: u32, mut f: impl FnMut(&[u32]) -> f64) -> Result<Self> {
        let size = group_size(p, n)?;
        let mut x = vec![0u32; n as usize];
        let mut values = Vec::with_capacity(size);
        for i in 0..size {
            decode_into(i, p, &mut x);
            values.push(f(&x));
        }
        Ok(Self { p, n, values })
    }

    /// Indicator of the coset `{x : x_coord = value}` (coordinates 0-based).
    pub fn coset_indicator(p: u32, n: u32, coord: usize, value: u32) -> Result<Self> {
        if coord >= n as usize || value >= p {
            return Err(Error::DimensionMismatch(format!(
                "coset x_{} = {value} invalid for p={p}, n={n}",
                coord + 1
            )));
        }
        Self::from_fn(p, n, |x| if x[coord] == value { 1.0 } else { 0.0 })
    }

    /// `1/2 + eps cos(2 pi (h.x + k) / p)`.
    pub fn character_bump(p: u32, n: u32, h: &[u32], k: u32, eps: f64) -> Result<Self> {
        if h.len() != n as usize {
            return Err(Error::DimensionMismatch("frequency length differs from n".into()));
        }
        let step = 2.0 * std::f64::consts::PI / p as f64;
        Self::from_fn(p, n, |x| {
            let dot: u64 = x.iter().zip(h).map(|(&a, &b)| a as u64 * b as u64).sum();
            0.5 + eps * (step * ((dot + k as u64) % p as u64) as f64).cos()
        })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Coordinates of the point stored at `index`.
    pub fn coords(&self, index: usize) -> Vec<u32> {
        let mut x = vec![0u32; self.n as usize];
        decode_into(index, self.p, &mut x);
        x
    }

    pub fn index_of(&self, x: &[u32]) -> usize {
        encode(x, self.p)
    }

    /// Index of `-x`.
    pub fn neg_index(&self, index: usize) -> usize {
        neg_index(index, self.p, self.n)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// `E |f|^2`.
    pub fn mean_square(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Every value lies in `[0, 1]`.
    pub fn is_colouring(&self) -> bool {
        self.values.iter().all(|v| (0.0..=1.0).contains(v))
    }

    /// `g = f - E f`.
    pub fn centered(&self) -> Self {
        let alpha = self.mean();
        self.map(|v| v - alpha)
    }

    /// `1 - f`.
    pub fn complement(&self) -> Self {
        self.map(|v| 1.0 - v)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            p: self.p,
            n: self.n,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `a f + b g`.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        self.check_same_group(other.p, other.n)?;
        Ok(Self {
            p: self.p,
            n: self.n,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        })
    }

    pub(crate) fn check_same_group(&self, p: u32, n: u32) -> Result<()> {
        if self.p != p || self.n != n {
            return Err(Error::DimensionMismatch(format!(
                "function on F_{}^{} used with F_{p}^{n}",
                self.p, self.n
            )));
        }
        Ok(())
    }

    pub fn dft(&self) -> Spectrum {
        let mut data: Vec<Complex64> = self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        transform(&mut data, self.p, self.n, false);
        let scale = 1.0 / data.len() as f64;
        for c in data.iter_mut() {
            *c *= scale;
        }
        Spectrum {
            p: self.p,
            n: self.n,
            coeffs: data,
        }
    }

    /// `sup_h |g^(h)|` for a centered `g`, taken over every `h` including 0.
    pub fn spectral_sup(&self) -> Result<f64> {
        let mean = self.mean();
        if mean.abs() > CENTERED_TOL {
            return Err(Error::NotCentered(mean));
        }
        Ok(self.dft().sup_abs())
    }

    pub fn to_document(&self) -> FunctionDocument {
        FunctionDocument {
            p: self.p,
            n: self.n,
            values: self.values.clone(),
        }
    }

    pub fn from_document(doc: FunctionDocument) -> Result<Self> {
        Self::new(doc.p, doc.n, doc.values)
    }

    /// Raw binary form: `GFPN`, then `p`, `n`, a reserved zero word (all u32
    /// little-endian), then `p^n` little-endian f64 values.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 8 * self.values.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&self.p.to_le_bytes());
        out.extend_from_slice(&self.n.to_le_bytes());
        out.extend_from_slice(&0u32.to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 16 || &bytes[..4] != MAGIC {
            return Err(Error::MalformedDocument("missing GFPN header".into()));
        }
        let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
        let (p, n) = (word(4), word(8));
        let size = group_size(p, n)?;
        let body = &bytes[16..];
        if body.len() != size * 8 {
            return Err(Error::MalformedDocument(format!(
                "expected {} payload bytes, found {}",
                size * 8,
                body.len()
            )));
        }
        let values = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::new(p, n, values)
    }

    /// Parses either file form, detected by the magic bytes.
    pub fn parse_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.starts_with(MAGIC) {
            Self::from_bytes(bytes)
        } else {
            let text = std::str::from_utf8(bytes)
                .map_err(|e| Error::MalformedDocument(e.to_string()))?;
            Self::from_document(serde_json::from_str(text)?)
        }
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::parse_bytes(&bytes)
    }

    /// Writes the binary form when the extension is `.bin` or `.gfpn`, JSON
    /// otherwise.
    pub fn write_file(&self, path: &Path) -> Result<()> {
        let binary = matches!(
            path.extension().and_then(|e| e.to_str()),
            Some("bin") | Some("gfpn")
        );
        let bytes = if binary {
            self.to_bytes()
        } else {
            serde_json::to_vec_pretty(&self.to_document())?
        };
        std::fs::File::create(path)?.write_all(&bytes)?;
        Ok(())
    }
}

impl Spectrum {
    pub fn new(p: u32, n: u32, coeffs: Vec<Complex64>) -> Result<Self> {
        let size = group_size(p, n)?;
        if coeffs.len() != size {
            return Err(Error::DimensionMismatch(format!(
                "expected {size} coefficients, got {}",
                coeffs.len()
            )));
        }
        Ok(Self { p, n, coeffs })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn get(&self, h: usize) -> Complex64 {
        self.coeffs[h]
    }

    pub fn sup_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    /// `sum_h |f^(h)|^2`.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Complex inverse transform.
    pub fn idft_complex(&self) -> Vec<Complex64> {
        let mut data = self.coeffs.clone();
        transform(&mut data, self.p, self.n, true);
        data
    }

    /// Inverse transform, keeping the real part.
    pub fn idft(&self) -> GroupFunction {
        GroupFunction {
            p: self.p,
            n: self.n,
            values: self.idft_complex().into_iter().map(|c| c.re).collect(),
        }
    }
}

pub(crate) fn decode_into(mut index: usize, p: u32, x: &mut [u32]) {
    for c in x.iter_mut() {
        *c = (index % p as usize) as u32;
        index /= p as usize;
    }
}

pub(crate) fn encode(x: &[u32], p: u32) -> usize {
    x.iter().rev().fold(0usize, |acc, &c| acc * p as usize + c as usize)
}

pub(crate) fn neg_index(mut index: usize, p: u32, n: u32) -> usize {
    let p = p as usize;
    let mut out = 0;
    let mut scale = 1;
    for _ in 0..n {
        let c = index % p;
        index /= p;
        out += ((p - c) % p) * scale;
        scale *= p;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(f: &GroupFunction) -> Vec<Complex64> {
        let p = f.p();
        let size = f.len();
        let roots = RootTable::new(p);
        (0..size)
            .map(|h| {
                let hx = f.coords(h);
                let mut acc = Complex64::new(0.0, 0.0);
                for x in 0..size {
                    let xx = f.coords(x);
                    let dot: u64 = hx.iter().zip(&xx).map(|(&a, &b)| (a * b) as u64).sum();
                    acc += f.values()[x] * roots.e(p as u64 * p as u64 - dot % p as u64);
                }
                acc / size as f64
            })
            .collect()
    }

    #[test]
    fn mean_examples() {
        assert_eq!(GroupFunction::constant(3, 2, 0.5).unwrap().mean(), 0.5);
        let point = GroupFunction::from_fn(3, 1, |x| if x[0] == 0 { 1.0 } else { 0.0 }).unwrap();
        assert!((point.mean() - 1.0 / 3.0).abs() < 1e-15);
        let coset = GroupFunction::coset_indicator(3, 2, 0, 1).unwrap();
        assert!((coset.mean() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn constant_transform() {
        let s = GroupFunction::constant(5, 2, 0.3).unwrap().dft();
        assert!((s.get(0) - Complex64::new(0.3, 0.0)).norm() < 1e-12);
        for h in 1..25 {
            assert!(s.get(h).norm() < 1e-12);
        }
    }

    #[test]
    fn point_mass_transform() {
        let f = GroupFunction::from_fn(3, 1, |x| if x[0] == 0 { 1.0 } else { 0.0 }).unwrap();
        for c in f.dft().coeffs() {
            assert!((c - Complex64::new(1.0 / 3.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn matches_naive_transform() {
        let f = GroupFunction::from_fn(5, 3, |x| ((x[0] * 7 + x[1] * 3 + x[2] * x[2]) % 11) as f64 / 10.0)
            .unwrap();
        let fast = f.dft();
        let slow = naive_dft(&f);
        for (a, b) in fast.coeffs().iter().zip(&slow) {
            assert!((a - b).norm() < 1e-12);
        }
        assert!((fast.energy() - f.mean_square()).abs() < 1e-9);
    }

    #[test]
    fn inverse_examples() {
        let half = GroupFunction::constant(3, 3, 0.5).unwrap();
        let back = half.dft().idft();
        assert!(back.values().iter().all(|v| (v - 0.5).abs() < 1e-12));
        let zero = Spectrum::new(7, 2, vec![Complex64::new(0.0, 0.0); 49]).unwrap();
        assert!(zero.idft().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn spectral_sup_of_coset() {
        let f = GroupFunction::coset_indicator(3, 2, 0, 0).unwrap();
        // centering with the true mean 1/3
        let g = f.centered();
        let sup = g.spectral_sup().unwrap();
        assert!((sup - 1.0 / 3.0).abs() < 1e-12);
        let spec = g.dft();
        // e_1 sits at index 1, 2 e_1 at index 2
        assert!((spec.get(1).norm() - 1.0 / 3.0).abs() < 1e-12);
        assert!((spec.get(2).norm() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_sup_requires_centering() {
        let f = GroupFunction::constant(3, 1, 0.5).unwrap();
        assert!(matches!(f.spectral_sup(), Err(Error::NotCentered(_))));
        assert_eq!(
            GroupFunction::constant(3, 2, 0.0).unwrap().spectral_sup().unwrap(),
            0.0
        );
    }

    #[test]
    fn binary_and_json_files() {
        let f = GroupFunction::from_fn(3, 2, |x| (x[0] + 2 * x[1]) as f64 / 7.0).unwrap();
        let bytes = f.to_bytes();
        assert_eq!(&bytes[..4], b"GFPN");
        assert_eq!(bytes.len(), 16 + 8 * 9);
        assert_eq!(GroupFunction::parse_bytes(&bytes).unwrap(), f);
        let json = serde_json::to_vec(&f.to_document()).unwrap();
        assert_eq!(GroupFunction::parse_bytes(&json).unwrap(), f);
        assert!(GroupFunction::from_bytes(&bytes[..20]).is_err());
    }

    #[test]
    fn size_cap() {
        assert!(matches!(
            GroupFunction::constant(31, 5, 0.0),
            Err(Error::TooLarge { .. })
        ));
    }
}
