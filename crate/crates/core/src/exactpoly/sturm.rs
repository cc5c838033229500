//! Sturm sequences, sign certification on closed intervals and root isolation.

use num_rational::BigRational;
use num_traits::Zero;

use super::certificate::{variations, Certificate, SignOutcome, SturmWitness, Witness};
use super::number::QSqrt2;
use super::poly::{ExactPoly, MAX_DEGREE};
use crate::error::{Error, Result};

/// `s_0 = p`, `s_1 = p'` and `s_{k+1} = -rem(s_{k-1}, s_k) / |lc|`.
#[derive(Debug, Clone, PartialEq)]
pub struct SturmChain {
    pub polys: Vec<ExactPoly>,
    pub quotients: Vec<ExactPoly>,
    pub scales: Vec<QSqrt2>,
}

impl SturmChain {
    pub fn new(p: &ExactPoly) -> Result<Self> {
        check_poly(p)?;
        let mut polys = vec![p.clone()];
        let mut quotients = Vec::new();
        let mut scales = Vec::new();
        let d = p.derivative();
        if d.is_zero() {
            return Ok(Self { polys, quotients, scales });
        }
        polys.push(d);
        loop {
            let k = polys.len() - 1;
            let (q, r) = polys[k - 1].div_rem(&polys[k]).ok_or(Error::ZeroPolynomial)?;
            quotients.push(q);
            if r.is_zero() {
                break;
            }
            let c = r.leading().abs();
            let inv = c.checked_inv().ok_or(Error::ZeroPolynomial)?;
            polys.push((-&r).scale(&inv));
            scales.push(c);
        }
        Ok(Self { polys, quotients, scales })
    }

    /// Last element, `gcd(p, p')` up to a positive constant.
    pub fn gcd(&self) -> &ExactPoly {
        self.polys.last().expect("chain is never empty")
    }

    pub fn variations(&self, x: &BigRational) -> usize {
        variations(&self.polys, x)
    }

    /// Distinct roots in `[lo, hi]`; the chain must start from a squarefree
    /// polynomial.
    pub fn count_closed(&self, lo: &BigRational, hi: &BigRational) -> usize {
        let at_lo = usize::from(self.polys[0].eval_exact(lo).is_zero());
        self.variations(lo) - self.variations(hi) + at_lo
    }
}

fn check_poly(p: &ExactPoly) -> Result<()> {
    match p.degree() {
        None => Err(Error::ZeroPolynomial),
        Some(d) if d > MAX_DEGREE => Err(Error::DegreeTooHigh(d)),
        Some(_) => Ok(()),
    }
}

fn check_interval(lo: &BigRational, hi: &BigRational) -> Result<()> {
    if lo < hi {
        Ok(())
    } else {
        Err(Error::InvalidInterval(format!("[{lo}, {hi}] is empty or degenerate")))
    }
}

/// Squarefree part of `p` with its Sturm chain, and the removed divisor.
fn squarefree_chain(p: &ExactPoly) -> Result<(SturmChain, ExactPoly)> {
    let chain = SturmChain::new(p)?;
    let g = chain.gcd().clone();
    if g.is_constant() {
        return Ok((chain, ExactPoly::one()));
    }
    let (sf, rem) = p.div_rem(&g).ok_or(Error::ZeroPolynomial)?;
    debug_assert!(rem.is_zero());
    Ok((SturmChain::new(&sf)?, g))
}

fn witness(
    p: &ExactPoly,
    chain: SturmChain,
    divisor: ExactPoly,
    lo: &BigRational,
    hi: &BigRational,
) -> SturmWitness {
    let variations_lo = chain.variations(lo);
    let variations_hi = chain.variations(hi);
    let root_count = chain.count_closed(lo, hi);
    let sign_lo = p.eval_exact(lo).sign();
    let sign_hi = p.eval_exact(hi).sign();
    let outcome = if root_count > 0 {
        SignOutcome::HasRoot
    } else if sign_lo > 0 {
        SignOutcome::StrictlyPositive
    } else {
        SignOutcome::StrictlyNegative
    };
    SturmWitness {
        poly: p.clone(),
        divisor,
        chain: chain.polys,
        quotients: chain.quotients,
        scales: chain.scales,
        lo: lo.clone(),
        hi: hi.clone(),
        sign_lo,
        sign_hi,
        variations_lo,
        variations_hi,
        root_count,
        outcome,
    }
}

/// Raw Sturm witness of `p` on `[lo, hi]`.
pub fn sturm_witness(p: &ExactPoly, lo: &BigRational, hi: &BigRational) -> Result<SturmWitness> {
    check_interval(lo, hi)?;
    let (chain, divisor) = squarefree_chain(p)?;
    Ok(witness(p, chain, divisor, lo, hi))
}

/// Decides the sign of `p` on the closed interval `[lo, hi]`. Endpoint roots
/// count as roots.
pub fn sturm_sign_on_interval(
    p: &ExactPoly,
    lo: &BigRational,
    hi: &BigRational,
) -> Result<(SignOutcome, Certificate)> {
    let w = sturm_witness(p, lo, hi)?;
    let outcome = w.outcome;
    let claim = match outcome {
        SignOutcome::StrictlyPositive => format!("{p} > 0 on [{lo}, {hi}]"),
        SignOutcome::StrictlyNegative => format!("{p} < 0 on [{lo}, {hi}]"),
        SignOutcome::HasRoot => format!("{p} has {} root(s) in [{lo}, {hi}]", w.root_count),
    };
    Ok((outcome, Certificate::new(claim, Witness::Sturm(w))))
}

/// Bisects `[lo, hi]`, which must hold exactly one distinct root of `p`,
/// down to width at most `precision`.
pub fn isolate_positive_root(
    p: &ExactPoly,
    lo: &BigRational,
    hi: &BigRational,
    precision: &BigRational,
) -> Result<((BigRational, BigRational), Certificate)> {
    check_interval(lo, hi)?;
    if *precision <= BigRational::zero() {
        return Err(Error::InvalidInterval(format!("precision {precision} must be positive")));
    }
    let (chain, divisor) = squarefree_chain(p)?;
    let total = chain.count_closed(lo, hi);
    if total != 1 {
        return Err(Error::NotExactlyOneRoot(total));
    }
    let two = BigRational::from_integer(2.into());
    let sf = &chain.polys[0];
    let (mut a, mut b) = (lo.clone(), hi.clone());
    while &b - &a > *precision {
        let m = (&a + &b) / &two;
        if sf.eval_exact(&m).is_zero() {
            a = m.clone();
            b = m;
            break;
        }
        if chain.count_closed(&a, &m) == 1 {
            b = m;
        } else {
            a = m;
        }
    }
    // a degenerate bracket is certified on a small interval around it
    let (cl, ch) = if a == b {
        (&a - precision / &two, &b + precision / &two)
    } else {
        (a.clone(), b.clone())
    };
    let w = witness(p, chain, divisor, &cl, &ch);
    let claim = format!("{p} has exactly one root in [{cl}, {ch}]");
    let cert = Certificate::new(claim, Witness::Sturm(w));
    Ok(((a, b), cert))
}
