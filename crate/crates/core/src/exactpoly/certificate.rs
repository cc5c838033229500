//! Certificates and the checker that replays them.
//!
//! The checker never trusts derived data stored in a witness: Sturm chains are
//! re-validated link by link, sign counts and endpoint values recomputed,
//! subdivision leaves re-bounded and identities re-expanded.

use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::number::{floor_dyadic, rat_serde, rat_vec_serde, QSqrt2};
use super::poly::{centered_remainder_bounds, ExactPoly, MultiPoly};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Sturm,
    FactoredSturm,
    Subdivision,
    RationalChain,
    Evaluation,
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignOutcome {
    StrictlyPositive,
    StrictlyNegative,
    HasRoot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = ">")]
    Gt,
}

impl Relation {
    pub fn holds(self, lhs: &QSqrt2, rhs: &QSqrt2) -> bool {
        let s = (lhs - rhs).sign();
        match self {
            Relation::Lt => s < 0,
            Relation::Le => s <= 0,
            Relation::Eq => s == 0,
            Relation::Ge => s >= 0,
            Relation::Gt => s > 0,
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Lt => "<",
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
            Relation::Gt => ">",
        })
    }
}

/// Sturm data for `poly / divisor` (squarefree) on `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SturmWitness {
    pub poly: ExactPoly,
    /// `gcd(poly, poly')` up to a constant; one when `poly` is squarefree.
    pub divisor: ExactPoly,
    /// `s_0 = poly / divisor`, `s_1 = s_0'`, and
    /// `s_{k-1} = q_k s_k - c_k s_{k+1}` with `c_k > 0`.
    pub chain: Vec<ExactPoly>,
    pub quotients: Vec<ExactPoly>,
    pub scales: Vec<QSqrt2>,
    #[serde(with = "rat_serde")]
    pub lo: BigRational,
    #[serde(with = "rat_serde")]
    pub hi: BigRational,
    pub sign_lo: i8,
    pub sign_hi: i8,
    pub variations_lo: usize,
    pub variations_hi: usize,
    /// Distinct roots in the closed interval.
    pub root_count: usize,
    pub outcome: SignOutcome,
}

/// `poly = (x - root)^multiplicity * cofactor.poly`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactoredWitness {
    pub poly: ExactPoly,
    #[serde(with = "rat_serde")]
    pub root: BigRational,
    pub multiplicity: u32,
    pub cofactor: SturmWitness,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatInterval {
    #[serde(with = "rat_serde")]
    pub lo: BigRational,
    #[serde(with = "rat_serde")]
    pub hi: BigRational,
}

/// Binary subdivision tree; every split halves the box along `axis`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tree {
    Leaf {
        #[serde(with = "rat_serde")]
        bound: BigRational,
    },
    Split {
        axis: usize,
        left: Box<Tree>,
        right: Box<Tree>,
    },
}

impl Tree {
    pub fn leaves(&self) -> usize {
        match self {
            Tree::Leaf { .. } => 1,
            Tree::Split { left, right, .. } => left.leaves() + right.leaves(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Tree::Leaf { .. } => 0,
            Tree::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum BoxClaim {
    /// Each leaf stores a lower bound of `F` on its box, which must be `>= 0`.
    NonNegative,
    /// Each leaf stores an upper bound of `|F|` on its box, at most `bound`.
    AbsAtMost {
        #[serde(with = "rat_serde")]
        bound: BigRational,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubdivisionWitness {
    pub poly: MultiPoly,
    pub domain: Vec<RatInterval>,
    pub claim: BoxClaim,
    pub tree: Tree,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleWitness {
    pub poly: MultiPoly,
    pub domain: Vec<RatInterval>,
    #[serde(with = "rat_vec_serde")]
    pub point: Vec<BigRational>,
    #[serde(with = "rat_serde")]
    pub value: BigRational,
}

/// `poly(at) = value` and `value <relation> bound`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationWitness {
    pub poly: ExactPoly,
    #[serde(with = "rat_serde")]
    pub at: BigRational,
    pub value: QSqrt2,
    pub relation: Relation,
    pub bound: QSqrt2,
}

/// `prod lhs = prod rhs` coefficientwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityWitness {
    pub lhs: Vec<MultiPoly>,
    pub rhs: Vec<MultiPoly>,
    pub expanded: MultiPoly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum StepKind {
    Compare {
        lhs: QSqrt2,
        relation: Relation,
        rhs: QSqrt2,
    },
    /// `bound <= base^exp` for `base >= 0`.
    PowLower {
        #[serde(with = "rat_serde")]
        base: BigRational,
        exp: u64,
        bits: u32,
        #[serde(with = "rat_serde")]
        bound: BigRational,
    },
    /// `0 <= bound <= sqrt(value)`.
    SqrtLower {
        #[serde(with = "rat_serde")]
        value: BigRational,
        #[serde(with = "rat_serde")]
        bound: BigRational,
    },
    /// `sqrt(value) <= bound`.
    SqrtUpper {
        #[serde(with = "rat_serde")]
        value: BigRational,
        #[serde(with = "rat_serde")]
        bound: BigRational,
    },
    /// `bound <= exp(-x)` for `0 <= x <= 1`, from the Taylor partial sum
    /// ending on a negative term.
    ExpNegLower {
        #[serde(with = "rat_serde")]
        x: BigRational,
        last_term: u32,
        #[serde(with = "rat_serde")]
        bound: BigRational,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainStep {
    pub label: String,
    #[serde(flatten)]
    pub kind: StepKind,
}

impl ChainStep {
    pub fn compare(label: impl Into<String>, lhs: QSqrt2, relation: Relation, rhs: QSqrt2) -> Self {
        Self {
            label: label.into(),
            kind: StepKind::Compare { lhs, relation, rhs },
        }
    }

    pub fn holds(&self) -> bool {
        match &self.kind {
            StepKind::Compare { lhs, relation, rhs } => relation.holds(lhs, rhs),
            StepKind::PowLower { base, exp, bits, bound } => {
                !base.is_negative() && *bound <= pow_lower(base, *exp, *bits)
            }
            StepKind::SqrtLower { value, bound } => !bound.is_negative() && bound * bound <= *value,
            StepKind::SqrtUpper { value, bound } => !bound.is_negative() && bound * bound >= *value,
            StepKind::ExpNegLower { x, last_term, bound } => {
                if x.is_negative() || *x > BigRational::one() || last_term % 2 == 0 {
                    return false;
                }
                *bound <= exp_neg_partial_sum(x, *last_term)
            }
        }
    }
}

/// `sum_{k <= last} (-x)^k / k!`.
pub fn exp_neg_partial_sum(x: &BigRational, last: u32) -> BigRational {
    let mut term = BigRational::one();
    let mut sum = BigRational::one();
    for k in 1..=last {
        term = -(term * x) / BigRational::from_integer(k.into());
        sum += &term;
    }
    sum
}

/// Lower bound of `base^exp` by square-and-multiply, rounding every
/// intermediate down to a multiple of `2^-bits`.
pub fn pow_lower(base: &BigRational, exp: u64, bits: u32) -> BigRational {
    let mut result = BigRational::one();
    let mut b = floor_dyadic(base, bits);
    let mut e = exp;
    while e > 0 {
        if e & 1 == 1 {
            result = floor_dyadic(&(&result * &b), bits);
        }
        e >>= 1;
        if e > 0 {
            b = floor_dyadic(&(&b * &b), bits);
        }
    }
    result
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum Witness {
    Sturm(SturmWitness),
    FactoredSturm(FactoredWitness),
    Subdivision(SubdivisionWitness),
    Counterexample(CounterexampleWitness),
    Evaluation(EvaluationWitness),
    Identity(IdentityWitness),
    RationalChain { steps: Vec<ChainStep> },
}

impl Witness {
    pub fn method(&self) -> Method {
        match self {
            Witness::Sturm(_) => Method::Sturm,
            Witness::FactoredSturm(_) => Method::FactoredSturm,
            Witness::Subdivision(_) | Witness::Counterexample(_) => Method::Subdivision,
            Witness::Evaluation(_) => Method::Evaluation,
            Witness::Identity(_) => Method::Identity,
            Witness::RationalChain { .. } => Method::RationalChain,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub claim: String,
    pub method: Method,
    pub witness: Witness,
    pub verified: bool,
}

impl Certificate {
    /// Wraps a witness and sets `verified` from an independent check.
    pub fn new(claim: impl Into<String>, witness: Witness) -> Self {
        let mut c = Self {
            claim: claim.into(),
            method: witness.method(),
            witness,
            verified: false,
        };
        c.verified = c.check().is_ok();
        c
    }

    /// Replays the witness from scratch.
    pub fn check(&self) -> Result<()> {
        if self.method != self.witness.method() {
            return self.fail("method does not match the witness");
        }
        let ok = match &self.witness {
            Witness::Sturm(w) => check_sturm(w),
            Witness::FactoredSturm(w) => check_factored(w),
            Witness::Subdivision(w) => check_subdivision(w),
            Witness::Counterexample(w) => check_counterexample(w),
            Witness::Evaluation(w) => w.poly.eval_exact(&w.at) == w.value && w.relation.holds(&w.value, &w.bound),
            Witness::Identity(w) => check_identity(w),
            Witness::RationalChain { steps } => match steps.iter().find(|s| !s.holds()) {
                Some(s) => return self.fail(&format!("step `{}` does not hold", s.label)),
                None => !steps.is_empty(),
            },
        };
        if ok {
            Ok(())
        } else {
            self.fail("witness does not re-check")
        }
    }

    fn fail(&self, why: &str) -> Result<()> {
        Err(Error::VerificationFailed(format!("{}: {why}", self.claim)))
    }
}

/// Sign variations of the chain at `x`, zeros dropped.
pub(crate) fn variations(chain: &[ExactPoly], x: &BigRational) -> usize {
    let mut count = 0;
    let mut last = 0i8;
    for p in chain {
        let s = p.eval_exact(x).sign();
        if s == 0 {
            continue;
        }
        if last != 0 && s != last {
            count += 1;
        }
        last = s;
    }
    count
}

fn check_sturm(w: &SturmWitness) -> bool {
    if w.lo > w.hi || w.chain.is_empty() || w.poly.is_zero() {
        return false;
    }
    if &w.divisor * &w.chain[0] != w.poly {
        return false;
    }
    let n = w.chain.len();
    if w.quotients.len() != n - 1 || w.scales.len() != n.saturating_sub(2) {
        return false;
    }
    if n == 1 {
        if !w.chain[0].is_constant() {
            return false;
        }
    } else if w.chain[1] != w.chain[0].derivative() {
        return false;
    }
    for k in 1..n {
        let lhs = &w.chain[k - 1];
        let mut rhs = &w.quotients[k - 1] * &w.chain[k];
        if k + 1 < n {
            if w.scales[k - 1].sign() <= 0 {
                return false;
            }
            rhs = &rhs - &w.chain[k + 1].scale(&w.scales[k - 1]);
        }
        if *lhs != rhs {
            return false;
        }
    }
    let vlo = variations(&w.chain, &w.lo);
    let vhi = variations(&w.chain, &w.hi);
    if vlo < vhi || vlo != w.variations_lo || vhi != w.variations_hi {
        return false;
    }
    let at_lo = usize::from(w.chain[0].eval_exact(&w.lo).is_zero());
    let count = vlo - vhi + at_lo;
    let slo = w.poly.eval_exact(&w.lo).sign();
    let shi = w.poly.eval_exact(&w.hi).sign();
    if count != w.root_count || slo != w.sign_lo || shi != w.sign_hi {
        return false;
    }
    match w.outcome {
        SignOutcome::StrictlyPositive => count == 0 && slo > 0,
        SignOutcome::StrictlyNegative => count == 0 && slo < 0,
        SignOutcome::HasRoot => count >= 1,
    }
}

fn check_factored(w: &FactoredWitness) -> bool {
    w.multiplicity % 2 == 0
        && check_sturm(&w.cofactor)
        && w.cofactor.outcome != SignOutcome::HasRoot
        && &ExactPoly::root_power(&w.root, w.multiplicity) * &w.cofactor.poly == w.poly
}

/// Lower and upper bounds of `F` on a box via the centered form.
pub(crate) fn box_bounds(poly: &MultiPoly, domain: &[RatInterval]) -> (BigRational, BigRational, BigRational) {
    let two = BigRational::from_integer(2.into());
    let center: Vec<BigRational> = domain.iter().map(|iv| (&iv.lo + &iv.hi) / &two).collect();
    let radius: Vec<BigRational> = domain.iter().map(|iv| (&iv.hi - &iv.lo) / &two).collect();
    let shifted = poly.shift(&center);
    let c0 = shifted.constant_term();
    let (lo, hi) = centered_remainder_bounds(&shifted, &radius);
    (&c0 + lo, &c0 + hi, c0)
}

pub(crate) fn split_box(domain: &[RatInterval], axis: usize) -> (Vec<RatInterval>, Vec<RatInterval>) {
    let mid = (&domain[axis].lo + &domain[axis].hi) / BigRational::from_integer(2.into());
    let mut left = domain.to_vec();
    let mut right = domain.to_vec();
    left[axis].hi = mid.clone();
    right[axis].lo = mid;
    (left, right)
}

fn check_tree(poly: &MultiPoly, domain: &[RatInterval], claim: &BoxClaim, tree: &Tree) -> bool {
    match tree {
        Tree::Leaf { bound } => {
            let (lo, hi, _) = box_bounds(poly, domain);
            match claim {
                BoxClaim::NonNegative => !bound.is_negative() && lo >= *bound,
                BoxClaim::AbsAtMost { bound: cap } => {
                    let m = if lo.abs() > hi.abs() { lo.abs() } else { hi.abs() };
                    m <= *bound && bound <= cap
                }
            }
        }
        Tree::Split { axis, left, right } => {
            if *axis >= domain.len() {
                return false;
            }
            let (l, r) = split_box(domain, *axis);
            check_tree(poly, &l, claim, left) && check_tree(poly, &r, claim, right)
        }
    }
}

fn check_subdivision(w: &SubdivisionWitness) -> bool {
    w.domain.len() == w.poly.nvars()
        && w.domain.iter().all(|iv| iv.lo <= iv.hi)
        && check_tree(&w.poly, &w.domain, &w.claim, &w.tree)
}

fn check_counterexample(w: &CounterexampleWitness) -> bool {
    w.point.len() == w.poly.nvars()
        && w.domain.len() == w.point.len()
        && w.point.iter().zip(&w.domain).all(|(x, iv)| iv.lo <= *x && *x <= iv.hi)
        && w.poly.eval(&w.point) == w.value
        && w.value.is_negative()
}

fn check_identity(w: &IdentityWitness) -> bool {
    let n = w.expanded.nvars();
    let product = |fs: &[MultiPoly]| {
        fs.iter()
            .fold(MultiPoly::constant(n, BigRational::one()), |acc, f| &acc * f)
    };
    if w.lhs.iter().chain(&w.rhs).any(|f| f.nvars() != n) {
        return false;
    }
    let l = product(&w.lhs);
    let r = product(&w.rhs);
    l == w.expanded && r == w.expanded && !(w.lhs.is_empty() && w.rhs.is_empty())
}

impl IdentityWitness {
    pub fn new(lhs: Vec<MultiPoly>, rhs: Vec<MultiPoly>) -> Self {
        let n = lhs.first().or(rhs.first()).map_or(0, MultiPoly::nvars);
        let expanded = lhs
            .iter()
            .fold(MultiPoly::constant(n, BigRational::one()), |acc, f| &acc * f);
        Self { lhs, rhs, expanded }
    }
}

impl RatInterval {
    pub fn new(lo: BigRational, hi: BigRational) -> Self {
        Self { lo, hi }
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn is_point(&self) -> bool {
        (&self.hi - &self.lo).is_zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactpoly::number::{rat, rat_int};

    #[test]
    fn pow_lower_is_below() {
        let b = rat(999, 1000);
        let lb = pow_lower(&b, 1000, 80);
        let exact = num_traits::pow(b, 1000);
        assert!(lb <= exact);
        assert!(&exact - &lb < rat(1, 1_000_000_000));
    }

    #[test]
    fn exp_partial_sums() {
        let x = rat(1, 10);
        let s1 = exp_neg_partial_sum(&x, 1);
        assert_eq!(s1, rat(9, 10));
        let s3 = exp_neg_partial_sum(&x, 3);
        assert!(s3 > s1 && s3 < rat(9049, 10000));
        let step = ChainStep {
            label: "e".into(),
            kind: StepKind::ExpNegLower {
                x,
                last_term: 3,
                bound: s3,
            },
        };
        assert!(step.holds());
    }

    #[test]
    fn sqrt_steps() {
        let up = ChainStep {
            label: "u".into(),
            kind: StepKind::SqrtUpper {
                value: rat_int(2),
                bound: rat(142, 100),
            },
        };
        let down = ChainStep {
            label: "d".into(),
            kind: StepKind::SqrtLower {
                value: rat_int(2),
                bound: rat(142, 100),
            },
        };
        assert!(up.holds());
        assert!(!down.holds());
    }

    #[test]
    fn tampered_chain_fails() {
        let steps = vec![ChainStep::compare("one", QSqrt2::int(1), Relation::Lt, QSqrt2::sqrt2())];
        let c = Certificate::new("1 < sqrt 2", Witness::RationalChain { steps });
        assert!(c.verified);
        let bad = vec![ChainStep::compare("two", QSqrt2::int(2), Relation::Lt, QSqrt2::sqrt2())];
        let c = Certificate::new("2 < sqrt 2", Witness::RationalChain { steps: bad });
        assert!(!c.verified);
        assert!(matches!(c.check(), Err(Error::VerificationFailed(_))));
    }
}
