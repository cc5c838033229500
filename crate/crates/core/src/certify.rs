//! Certified constants for the nine-variable system `Phi`.
//!
//! Notation: `alpha = E f`, `g = f - alpha`, `T4 = sum |g^|^4` and
//! `T5 = sum |g^|^4 g^`, so that `T_Phi(f) = (alpha^4 + T4)(alpha^5 + T5)`.
//! The derivation runs `c0 -> c1 -> (c2, c3, C4) -> (c5, c6, l0)` and every
//! step leaves a [`Certificate`].

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactpoly::certificate::{
    pow_lower, ChainStep, EvaluationWitness, FactoredWitness, IdentityWitness, RatInterval, StepKind,
};
use crate::exactpoly::number::{ceil_dyadic, floor_dyadic, pow2, rat, rat_int, rat_serde};
use crate::exactpoly::sturm::sturm_witness;
use crate::exactpoly::{
    abs_upper_bound_on_box, isolate_positive_root, sturm_sign_on_interval, subdivision_positive_on_box,
    Certificate, ExactPoly, MultiPoly, QSqrt2, Relation, SignOutcome, Witness,
};

/// Search cap for `l0`.
pub const L_CAP: u64 = 10_000_000;

/// Bits kept by directed rounding in powers.
const POW_BITS: u32 = 160;
/// Bits for square-root enclosures.
const SQRT_BITS: u32 = 64;
/// `c5` is searched on the grid `k / 2^C5_GRID_BITS`.
const C5_GRID_BITS: u32 = 12;
const BOX_DEPTH: u32 = 40;

fn one() -> BigRational {
    BigRational::one()
}

fn q2(x: &BigRational) -> QSqrt2 {
    QSqrt2::rational(x.clone())
}

fn x_poly() -> ExactPoly {
    ExactPoly::x()
}

fn one_minus_x() -> ExactPoly {
    &ExactPoly::one() - &x_poly()
}

/// `q(x) = x^5 - (1-x) x^4 / sqrt 2 - (1-x)^5 / (2 sqrt 2)`.
pub fn q_poly() -> ExactPoly {
    let r2 = QSqrt2::new(BigRational::zero(), rat(1, 2)); // 1/sqrt 2
    let x = x_poly();
    let y = one_minus_x();
    let a = x.pow(5);
    let b = (&y * &x.pow(4)).scale(&r2);
    let c = y.pow(5).scale(&r2.scale(&rat(1, 2)));
    &(&a - &b) - &c
}

/// `q~(x) = x^9 + (1-x)^4 q(x) / 2`.
pub fn q_tilde(q: &ExactPoly) -> ExactPoly {
    let y4 = one_minus_x().pow(4).scale(&QSqrt2::frac(1, 2));
    &x_poly().pow(9) + &(&y4 * q)
}

/// `s(x) = 2^-10 + 2^-8 x - 2^-3 x^2 - x^3`.
pub fn s_poly() -> ExactPoly {
    ExactPoly::from_rationals(&[pow2(-10), pow2(-8), -pow2(-3), rat_int(-1)]).expect("degree 3")
}

/// `r_a(x) = a^5 - a^4 x - x^3`.
pub fn r_poly(a: &BigRational) -> ExactPoly {
    ExactPoly::from_rationals(&[
        num_traits::pow(a.clone(), 5),
        -num_traits::pow(a.clone(), 4),
        BigRational::zero(),
        rat_int(-1),
    ])
    .expect("degree 3")
}

/// `x^k + (1-x)^k - 2^(1-k)`.
pub fn convexity_poly(k: u32) -> ExactPoly {
    let d = &x_poly().pow(k) + &one_minus_x().pow(k);
    &d - &ExactPoly::constant(q2(&pow2(1 - k as i64)))
}

/// `F(alpha, x) = alpha^5 - alpha^4 x - x^3`.
pub fn local_poly() -> MultiPoly {
    let a = MultiPoly::var(2, 0);
    let x = MultiPoly::var(2, 1);
    &(&a.pow(5) - &(&a.pow(4) * &x)) - &x.pow(3)
}

/// `P(alpha, T4, T5) = T_Phi(f) T_Phi(1 - f)` in variables `(alpha, T4, T5)`.
pub fn product_poly() -> MultiPoly {
    let a = MultiPoly::var(3, 0);
    let t4 = MultiPoly::var(3, 1);
    let t5 = MultiPoly::var(3, 2);
    let b = &MultiPoly::constant(3, one()) - &a;
    let t45 = &t4 * &t5;
    let left = &(&(&a.pow(9) + &(&a.pow(5) * &t4)) + &(&a.pow(4) * &t5)) + &t45;
    let right = &(&(&b.pow(9) + &(&b.pow(5) * &t4)) - &(&b.pow(4) * &t5)) - &t45;
    &left * &right
}

fn iv(lo: BigRational, hi: BigRational) -> RatInterval {
    RatInterval::new(lo, hi)
}

fn require(cert: Certificate) -> Result<Certificate> {
    match cert.check() {
        Ok(()) if cert.verified => Ok(cert),
        Ok(()) => Err(Error::VerificationFailed(cert.claim)),
        Err(e) => Err(e),
    }
}

fn fail(claim: &str, why: &str) -> Error {
    Error::VerificationFailed(format!("{claim}: {why}"))
}

/// Certifies `p >= 0` on `[lo, hi]` where `p = (x - root)^m * cofactor`
/// with `m` even and the cofactor of constant sign.
fn factored_nonneg(
    claim: &str,
    p: &ExactPoly,
    root: &BigRational,
    m: u32,
    lo: &BigRational,
    hi: &BigRational,
) -> Result<Certificate> {
    let (cofactor, rem) = p
        .div_rem(&ExactPoly::root_power(root, m))
        .ok_or_else(|| fail(claim, "bad factor"))?;
    if !rem.is_zero() {
        return Err(fail(claim, "root multiplicity is lower than claimed"));
    }
    let w = sturm_witness(&cofactor, lo, hi)?;
    if w.outcome != SignOutcome::StrictlyPositive {
        return Err(fail(claim, "cofactor is not positive"));
    }
    let fw = FactoredWitness {
        poly: p.clone(),
        root: root.clone(),
        multiplicity: m,
        cofactor: w,
    };
    require(Certificate::new(claim, Witness::FactoredSturm(fw)))
}

/// `x^k + (1-x)^k >= 2^(1-k)` on `[0, 1]`.
pub fn convexity_certificate(k: u32) -> Result<Certificate> {
    let claim = format!("x^{k} + (1-x)^{k} >= 2^{} on [0, 1]", 1 - k as i64);
    if k < 1 {
        return Err(fail(&claim, "k must be positive"));
    }
    if k == 1 {
        let steps = vec![ChainStep::compare(
            "x + (1-x) = 1 = 2^0",
            QSqrt2::one(),
            Relation::Eq,
            q2(&pow2(0)),
        )];
        return require(Certificate::new(claim, Witness::RationalChain { steps }));
    }
    if k <= 33 {
        return factored_nonneg(&claim, &convexity_poly(k), &rat(1, 2), 2, &rat_int(0), &rat_int(1));
    }
    // x = 1/2 + y gives 2 sum_{j even} C(k, j) 2^(j-k) y^j, every term >= 0,
    // and the j = 0 term is 2^(1-k)
    let steps = vec![
        ChainStep::compare(
            "even-index binomial terms C(k,j) 2^(j-k) y^j are nonnegative; constant term 2 * 2^-k",
            q2(&(rat_int(2) * pow2(-(k as i64)))),
            Relation::Eq,
            q2(&pow2(1 - k as i64)),
        ),
        ChainStep::compare("k >= 2", QSqrt2::int(k as i64), Relation::Ge, QSqrt2::int(2)),
    ];
    require(Certificate::new(claim, Witness::RationalChain { steps }))
}

/// Certificates for the seven lemma-level claims, using the given `q`.
/// Fails on the first claim that does not certify.
pub fn lemma_suite_with(q: &ExactPoly, c1: &BigRational) -> Result<Vec<Certificate>> {
    let zero = rat_int(0);
    let half = rat(1, 2);
    let mut out = Vec::with_capacity(7);

    out.push(relabel("(i)", convexity_certificate(9)?));

    // alpha^5 + alpha^4 (1 - alpha) = alpha^4
    let ii = &x_poly().pow(5) + &(&x_poly().pow(4) * &one_minus_x());
    out.push(relabel(
        "(ii)",
        factored_nonneg("alpha^5 + alpha^4 (1-alpha) >= 0 on [0, 1/2]", &ii, &zero, 4, &zero, &half)?,
    ));

    let (o, c) = sturm_sign_on_interval(q, &zero, &half)?;
    if o != SignOutcome::StrictlyNegative {
        return Err(fail("(iii) q < 0 on [0, 1/2]", &format!("Sturm outcome {o:?}")));
    }
    out.push(relabel("(iii) q < 0 on [0, 1/2];", require(c)?));

    let (_, c0_cert) = c0_from(q)?;
    out.push(relabel("(iv)", c0_cert));

    let box_domain = [iv(rat(1, 3), rat(2, 3)), iv(zero.clone(), c1.clone())];
    let (ok, c) = subdivision_positive_on_box(&local_poly(), &box_domain, BOX_DEPTH)?;
    if !ok {
        return Err(fail("(v) alpha^5 - alpha^4 x - x^3 >= 0", &c.claim));
    }
    out.push(relabel(
        &format!("(v) alpha^5 - alpha^4 x - x^3 >= 0 on [1/3, 2/3] x [0, {c1}];"),
        require(c)?,
    ));

    let (o, c) = sturm_sign_on_interval(&s_poly(), &zero, &rat(7, 100))?;
    if o != SignOutcome::StrictlyPositive {
        return Err(fail("(vi) s > 0 on [0, 7/100]", &format!("Sturm outcome {o:?}")));
    }
    out.push(relabel("(vi) s > 0 on [0, 7/100];", require(c)?));

    out.push(relabel("(vii)", factorization_identity()?));
    Ok(out)
}

fn relabel(tag: &str, mut c: Certificate) -> Certificate {
    c.claim = format!("{tag} {}", c.claim);
    c
}

/// The seven lemma-level certificates for the true `q`.
pub fn verify_lemma_suite() -> Result<Vec<Certificate>> {
    let (c1, _) = derive_c1()?;
    lemma_suite_with(&q_poly(), &c1)
}

/// `(2^-9 + 2^-5 T4 + 2^-4 T5 + T4 T5)(2^-9 + 2^-5 T4 - 2^-4 T5 - T4 T5)
///  = (2^-4 + T4)^2 (2^-10 - T5^2)` in variables `(T4, T5)`.
pub fn factorization_identity() -> Result<Certificate> {
    let t4 = MultiPoly::var(2, 0);
    let t5 = MultiPoly::var(2, 1);
    let c = |e: i64| MultiPoly::constant(2, pow2(e));
    let t45 = &t4 * &t5;
    let base = &c(-9) + &(&t4 * &c(-5));
    let plus = &(&base + &(&t5 * &c(-4))) + &t45;
    let minus = &(&base - &(&t5 * &c(-4))) - &t45;
    let sq = &c(-4) + &t4;
    let tail = &c(-10) - &t5.pow(2);
    let w = IdentityWitness::new(vec![plus, minus], vec![sq.clone(), sq, tail]);
    require(Certificate::new(
        "(2^-9 + 2^-5 T4 + 2^-4 T5 + T4 T5)(2^-9 + 2^-5 T4 - 2^-4 T5 - T4 T5) = (2^-4 + T4)^2 (2^-10 - T5^2)",
        Witness::Identity(w),
    ))
}

fn c0_from(q: &ExactPoly) -> Result<(BigRational, Certificate)> {
    let qt = q_tilde(q);
    let at = rat(9, 20);
    let value = qt.eval_exact(&at);
    let c0 = floor_dyadic(&value.lower_rational(SQRT_BITS), 40);
    if !c0.is_positive() {
        return Err(fail("q~(9/20) > 0", &format!("exact value {value}")));
    }
    let w = EvaluationWitness {
        poly: qt,
        at,
        value,
        relation: Relation::Ge,
        bound: q2(&c0),
    };
    let cert = require(Certificate::new(
        format!("q~(9/20) >= c0 = {c0} > 0"),
        Witness::Evaluation(w),
    ))?;
    Ok((c0, cert))
}

/// `c0 <= q~(9/20)`, a dyadic lower bound of the exact value.
pub fn derive_c0() -> Result<(BigRational, Certificate)> {
    c0_from(&q_poly())
}

/// `c1` below the root of `r_{1/3}` with `F >= 0` certified on
/// `[1/3, 2/3] x [0, c1]`. Returns the isolation and box certificates.
pub fn derive_c1() -> Result<(BigRational, Vec<Certificate>)> {
    let r = r_poly(&rat(1, 3));
    let ((a, _b), iso) = isolate_positive_root(&r, &rat_int(0), &rat_int(1), &rat(1, 1024))?;
    let iso = require(iso)?;
    let c1 = a;
    if !r.eval_exact(&c1).is_positive_sign() {
        return Err(fail("r_{1/3}(c1) > 0", "c1 is not below the root"));
    }
    let cert = box_certificate(&c1)?;
    Ok((c1, vec![iso, cert]))
}

/// Runs the box check on `[1/3, 2/3] x [0, c]`.
pub fn box_check(c: &BigRational) -> Result<(bool, Certificate)> {
    let domain = [iv(rat(1, 3), rat(2, 3)), iv(rat_int(0), c.clone())];
    subdivision_positive_on_box(&local_poly(), &domain, BOX_DEPTH)
}

fn box_certificate(c1: &BigRational) -> Result<Certificate> {
    let (ok, cert) = box_check(c1)?;
    if !ok {
        return Err(fail("local inequality on the c1 box", &cert.claim));
    }
    require(cert)
}

trait PositiveSign {
    fn is_positive_sign(&self) -> bool;
}

impl PositiveSign for QSqrt2 {
    fn is_positive_sign(&self) -> bool {
        self.sign() > 0
    }
}

/// Output of [`derive_c2_c3_c4`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalConstants {
    #[serde(with = "rat_serde")]
    pub c2: BigRational,
    #[serde(with = "rat_serde")]
    pub c3: BigRational,
    #[serde(rename = "C4", with = "rat_serde")]
    pub c4: BigRational,
    #[serde(with = "rat_serde")]
    pub t4_max: BigRational,
    #[serde(with = "rat_serde")]
    pub t5_max: BigRational,
    /// Justification of each face of the `(alpha, T4, T5)` box.
    pub faces: Vec<String>,
    pub certificates: Vec<Certificate>,
}

fn t4_max_of(c2: &BigRational) -> BigRational {
    num_traits::pow(rat(1, 2) + c2, 4) / rat_int(2)
}

/// Largest `k / 1024 <= 1/6` keeping `(1/2 + c2)^4 / 2 <= 7/100`.
pub fn choose_c2() -> (BigRational, Certificate) {
    let limit = rat(7, 100);
    let mut k = 0i64;
    while k < 170 && t4_max_of(&rat(k + 1, 1024)) <= limit {
        k += 1;
    }
    let c2 = rat(k, 1024);
    let next = rat(k + 1, 1024);
    let steps = vec![
        ChainStep::compare("(1/2 + c2)^4 / 2 <= 7/100", q2(&t4_max_of(&c2)), Relation::Le, q2(&limit)),
        ChainStep::compare("c2 <= 1/6", q2(&c2), Relation::Le, q2(&rat(1, 6))),
        ChainStep::compare(
            "next grid point fails: (1/2 + c2 + 1/1024)^4 / 2 > 7/100 or exceeds 1/6",
            QSqrt2::int(i64::from(t4_max_of(&next) > limit || next > rat(1, 6))),
            Relation::Eq,
            QSqrt2::one(),
        ),
    ];
    let cert = Certificate::new(format!("c2 = {c2}"), Witness::RationalChain { steps });
    (c2, cert)
}

/// `c2`, `c3`, `C4` with certificates. `c2_override` replaces the grid choice
/// (used for the degenerate `c2 = 0` self-test).
pub fn derive_c2_c3_c4(c2_override: Option<BigRational>) -> Result<LocalConstants> {
    let mut certificates = Vec::new();
    let c2 = match c2_override {
        Some(c) => {
            if c.is_negative() || c > rat(1, 6) || t4_max_of(&c) > rat(7, 100) {
                return Err(Error::InvalidConfig(format!("c2 = {c} leaves [0, 1/6] or breaks T4 <= 7/100")));
            }
            c
        }
        None => {
            let (c, cert) = choose_c2();
            certificates.push(require(cert)?);
            c
        }
    };
    let half = rat(1, 2);
    let t4_max = t4_max_of(&c2);
    // ((1/2 + c2)/sqrt 2 + 2 c2) T4max
    let t5_exact = (QSqrt2::new(rat_int(2) * &c2, (&half + &c2) / rat_int(2))).scale(&t4_max);
    let t5_max = ceil_dyadic(&t5_exact.upper_rational(SQRT_BITS), 48);
    let mut steps = vec![ChainStep::compare(
        "T5max >= ((1/2 + c2)/sqrt 2 + 2 c2) T4max",
        q2(&t5_max),
        Relation::Ge,
        t5_exact,
    )];

    // C4 >= sup |dP/dalpha| on the box
    let dp = product_poly().derivative(0);
    let domain = [
        iv(&half - &c2, &half + &c2),
        iv(rat_int(0), t4_max.clone()),
        iv(-t5_max.clone(), t5_max.clone()),
    ];
    let (c4, c4_cert) = abs_upper_bound_on_box(&dp, &domain, BOX_DEPTH, &rat(1, 8), 40)?;
    certificates.push(require(c4_cert)?);

    // c3 = 2^-3 min s on [0, T4max]; s rises then falls, so the minimum sits
    // at an endpoint
    let s = s_poly();
    let s0 = s.eval_exact(&rat_int(0)).rational_part().clone();
    let s1 = s.eval_exact(&t4_max).rational_part().clone();
    let smin = if s0 < s1 { s0 } else { s1 };
    let m = floor_dyadic(&smin, 40) - pow2(-40);
    let shifted = &s - &ExactPoly::constant(q2(&m));
    let (o, cert) = sturm_sign_on_interval(&shifted, &rat_int(0), &t4_max)?;
    if o != SignOutcome::StrictlyPositive || !m.is_positive() {
        return Err(fail("s > m on [0, T4max]", &format!("outcome {o:?}, m = {m}")));
    }
    certificates.push(relabel(&format!("s(x) - {m} > 0 on [0, T4max]:"), require(cert)?));
    let c3 = &m / rat_int(8);

    // (2^-4 + T4)^2 (2^-10 - T4^2/8) = 2^-18 + 2^-3 T4 s(T4)
    let t = MultiPoly::var(1, 0);
    let k = |e: i64| MultiPoly::constant(1, pow2(e));
    let sq = &k(-4) + &t;
    let tail = &k(-10) - &t.pow(2).scale(&rat(1, 8));
    let s_multi = MultiPoly::from_univariate(&s, 1, 0)?;
    let rhs = &k(-18) + &(&(&t * &s_multi) * &k(-3));
    let lhs_product = &(&sq * &sq) * &tail;
    let w = IdentityWitness::new(vec![lhs_product], vec![rhs]);
    certificates.push(require(Certificate::new(
        "(2^-4 + T4)^2 (2^-10 - T4^2/8) = 2^-18 + 2^-3 T4 s(T4)",
        Witness::Identity(w),
    ))?);

    steps.push(ChainStep::compare("T4max <= 7/100", q2(&t4_max), Relation::Le, q2(&rat(7, 100))));
    steps.push(ChainStep::compare("c3 > 0", q2(&c3), Relation::Gt, QSqrt2::zero()));
    steps.push(ChainStep::compare("C4 >= 0", q2(&c4), Relation::Ge, QSqrt2::zero()));
    certificates.push(require(Certificate::new(
        format!("c2 = {c2}, c3 = {c3}, C4 = {c4}"),
        Witness::RationalChain { steps },
    ))?);

    let faces = vec![
        format!("alpha in [1/2 - c2, 1/2 + c2] with c2 = {c2}: hypothesis |alpha - 1/2| <= c2"),
        format!(
            "0 <= T4 <= {t4_max}: T4 = sum |g^|^4 >= 0, and T4 <= sup|g^|^2 E g^2 <= (1/2 + c2)^4 / 2 \
             since |g| <= 1/2 + c2 and 2 sup|g^|^2 <= E g^2"
        ),
        format!(
            "|T5| <= {t5_max}: |T5| <= sup|g^| T4 with sup|g^| <= (1/2 + c2)/sqrt 2"
        ),
        "T5^2 <= T4^2 / 8 in the alpha = 1/2 comparison: sup|g^|^2 <= E g^2 / 2 <= alpha(1 - alpha) / 2 <= 1/8".into(),
        "T4 >= sup|g^|^4, so c3 T4 >= c3 sup|g^|^4".into(),
    ];
    Ok(LocalConstants {
        c2,
        c3,
        c4,
        t4_max,
        t5_max,
        faces,
        certificates,
    })
}

/// Inputs of the `l0` search.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainInputs {
    pub c0: BigRational,
    pub c1: BigRational,
    pub c2: BigRational,
    pub c3: BigRational,
    pub c4: BigRational,
}

/// One condition of the three-case argument at a given `l`, oriented as
/// `lhs >= rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub name: String,
    #[serde(with = "rat_serde")]
    pub lhs: BigRational,
    #[serde(with = "rat_serde")]
    pub rhs: BigRational,
    pub slack: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlackRow {
    pub l: u64,
    pub conditions: Vec<ConditionCheck>,
}

impl SlackRow {
    pub fn all_hold(&self) -> bool {
        self.conditions.iter().all(|c| c.holds)
    }

    pub fn first_failure(&self) -> Option<&ConditionCheck> {
        self.conditions.iter().find(|c| !c.holds)
    }
}

/// Upper bound of `sqrt(l)` with denominator `2^bits`.
pub fn sqrt_upper(l: u64, bits: u32) -> BigRational {
    let scaled = BigInt::from(l) << (2 * bits as usize);
    let r = scaled.sqrt();
    let exact = &r * &r == scaled;
    let num = if exact { r } else { r + 1u32 };
    BigRational::new(num, BigInt::one() << bits as usize)
}

/// Lower bound of `sqrt(x)` with denominator `2^bits`.
pub fn sqrt_lower(x: &BigRational, bits: u32) -> BigRational {
    let scale = BigRational::from_integer(BigInt::one() << (2 * bits as usize));
    let r = (x * scale).floor().to_integer().sqrt();
    BigRational::new(r, BigInt::one() << bits as usize)
}

struct Cond {
    c5: BigRational,
    m: BigRational,
    half_gap: BigRational,
    growth: BigRational,
    inputs: ChainInputs,
}

impl Cond {
    fn new(inputs: &ChainInputs, c5: BigRational, c6: BigRational) -> Self {
        let m = if inputs.c2 < rat(1, 6) { inputs.c2.clone() } else { rat(1, 6) };
        let half_gap = &inputs.c3 * num_traits::pow(inputs.c1.clone(), 4) / rat_int(2);
        let growth = one() + rat_int(256) * &c6;
        Self {
            c5,
            m,
            half_gap,
            growth,
            inputs: inputs.clone(),
        }
    }

    fn check(&self, i: usize, l: u64) -> ConditionCheck {
        let lr = rat_int(l as i64);
        let c5 = &self.c5;
        let (name, lhs, rhs) = match i {
            0 => (
                "(1) c5/sqrt(l) <= min(c2, 1/6): l min(c2,1/6)^2 >= c5^2",
                &lr * &self.m * &self.m,
                c5 * c5,
            ),
            1 => (
                "(2) C4 c5/sqrt(l) <= c3 c1^4 / 2: l (c3 c1^4 / 2)^2 >= (C4 c5)^2",
                &lr * &self.half_gap * &self.half_gap,
                num_traits::pow(&self.inputs.c4 * c5, 2),
            ),
            2 => {
                let base = one() - rat_int(4) * c5 * c5 / &lr;
                let lhs = if base.is_positive() {
                    pow_lower(&base, l, POW_BITS) * &self.growth * &self.growth
                } else {
                    BigRational::zero()
                };
                ("(3) (1 - 4 c5^2/l)^l (1 + 2^8 c6)^2 >= 1", lhs, one())
            }
            _ => {
                let su = sqrt_upper(l, SQRT_BITS);
                let base = one() + rat_int(2) * c5 / su;
                let lhs = &self.inputs.c0 * pow_lower(&base, l, POW_BITS);
                ("(4) c0 (1 + 2 c5/sqrt(l))^l >= 2^-8", lhs, pow2(-8))
            }
        };
        let holds = lhs >= rhs;
        let slack = (&lhs - &rhs).to_f64().unwrap_or(f64::NAN);
        ConditionCheck {
            name: name.into(),
            lhs,
            rhs,
            slack,
            holds,
        }
    }

    fn row(&self, l: u64) -> SlackRow {
        SlackRow {
            l,
            conditions: (0..4).map(|i| self.check(i, l)).collect(),
        }
    }

    /// Smallest `l <= L_CAP` with condition `i`, assuming it is monotone.
    fn min_l(&self, i: usize) -> Option<u64> {
        if !self.check(i, L_CAP).holds {
            return None;
        }
        let (mut lo, mut hi) = (0u64, L_CAP);
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.check(i, mid).holds {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some(hi)
    }

    fn l0(&self) -> Option<u64> {
        let mut best = 1;
        for i in 0..4 {
            best = best.max(self.min_l(i)?);
        }
        Some(best)
    }

    fn steps(&self, l: u64) -> Vec<ChainStep> {
        let lr = rat_int(l as i64);
        let c5 = &self.c5;
        let mut steps = Vec::new();
        let row = self.row(l);
        for (i, c) in row.conditions.iter().enumerate() {
            match i {
                2 => {
                    let base = one() - rat_int(4) * c5 * c5 / &lr;
                    let pl = pow_lower(&base, l, POW_BITS);
                    steps.push(ChainStep {
                        label: format!("l = {l}: b3 <= (1 - 4 c5^2/l)^l"),
                        kind: StepKind::PowLower {
                            base,
                            exp: l,
                            bits: POW_BITS,
                            bound: pl.clone(),
                        },
                    });
                    steps.push(ChainStep::compare(
                        format!("l = {l}: b3 (1 + 2^8 c6)^2 >= 1"),
                        q2(&(&pl * &self.growth * &self.growth)),
                        Relation::Ge,
                        QSqrt2::one(),
                    ));
                }
                3 => {
                    let su = sqrt_upper(l, SQRT_BITS);
                    let base = one() + rat_int(2) * c5 / &su;
                    let pl = pow_lower(&base, l, POW_BITS);
                    steps.push(ChainStep {
                        label: format!("l = {l}: u >= sqrt(l), so 1 + 2 c5/u <= 1 + 2 c5/sqrt(l)"),
                        kind: StepKind::SqrtUpper {
                            value: lr.clone(),
                            bound: su,
                        },
                    });
                    steps.push(ChainStep {
                        label: format!("l = {l}: b4 <= (1 + 2 c5/u)^l"),
                        kind: StepKind::PowLower {
                            base,
                            exp: l,
                            bits: POW_BITS,
                            bound: pl.clone(),
                        },
                    });
                    steps.push(ChainStep::compare(
                        format!("l = {l}: c0 b4 >= 2^-8"),
                        q2(&(&self.inputs.c0 * &pl)),
                        Relation::Ge,
                        q2(&pow2(-8)),
                    ));
                }
                _ => steps.push(ChainStep::compare(
                    format!("l = {l}: {}", c.name),
                    q2(&c.lhs),
                    Relation::Ge,
                    q2(&c.rhs),
                )),
            }
        }
        steps
    }
}

/// Result of [`derive_l0`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L0Derivation {
    #[serde(with = "rat_serde")]
    pub c5: BigRational,
    #[serde(with = "rat_serde")]
    pub c6: BigRational,
    pub l0: u64,
    pub slack: Vec<SlackRow>,
    pub certificates: Vec<Certificate>,
}

fn c6_of(inputs: &ChainInputs) -> Result<(BigRational, Vec<ChainStep>)> {
    let a = pow2(-18) + &inputs.c3 * num_traits::pow(inputs.c1.clone(), 4) / rat_int(2);
    let root = sqrt_lower(&a, SQRT_BITS);
    let c6 = floor_dyadic(&(rat_int(2) * &root - pow2(-8)), 64);
    if !c6.is_positive() {
        return Err(fail("c6 > 0", &format!("c6 = {c6}")));
    }
    let steps = vec![
        ChainStep {
            label: "r <= sqrt(2^-18 + c3 c1^4 / 2)".into(),
            kind: StepKind::SqrtLower { value: a, bound: root.clone() },
        },
        ChainStep::compare(
            "c6 <= 2 r - 2^-8",
            q2(&c6),
            Relation::Le,
            q2(&(rat_int(2) * root - pow2(-8))),
        ),
        ChainStep::compare("c6 > 0", q2(&c6), Relation::Gt, QSqrt2::zero()),
    ];
    Ok((c6, steps))
}

/// `exp(-2 c5^2) >= 1 - 2 c5^2 + ... - (2 c5^2)^3/6`; the candidate is valid
/// when that bound times `1 + 2^8 c6` exceeds one.
fn c5_admissible(c5: &BigRational, c6: &BigRational) -> Option<BigRational> {
    let x = rat_int(2) * c5 * c5;
    if x > one() {
        return None;
    }
    let e = crate::exactpoly::certificate::exp_neg_partial_sum(&x, 3);
    (&e * (one() + rat_int(256) * c6) > one()).then_some(e)
}

/// `c5`, `c6` and the least `l0 <= L_CAP` for which all four conditions
/// hold, with `c5` chosen on a dyadic grid to make `l0` small.
pub fn derive_l0(inputs: &ChainInputs) -> Result<L0Derivation> {
    let (c6, mut steps) = c6_of(inputs)?;
    let den = 1i64 << C5_GRID_BITS;
    let mut ks = Vec::new();
    let mut k = 1i64;
    while c5_admissible(&rat(k, den), &c6).is_some() {
        ks.push(k);
        k += 1;
    }
    let best = ks
        .par_iter()
        .filter_map(|&k| Cond::new(inputs, rat(k, den), c6.clone()).l0().map(|l| (l, k)))
        .min()
        .ok_or(Error::NoSuchL(L_CAP))?;
    let (l0, k) = best;
    let cond = Cond::new(inputs, rat(k, den), c6.clone());
    let c5 = cond.c5.clone();
    let e = c5_admissible(&c5, &c6).expect("candidate came from the admissible range");
    steps.push(ChainStep {
        label: "e <= exp(-2 c5^2)".into(),
        kind: StepKind::ExpNegLower {
            x: rat_int(2) * &c5 * &c5,
            last_term: 3,
            bound: e.clone(),
        },
    });
    steps.push(ChainStep::compare(
        "e (1 + 2^8 c6) > 1",
        q2(&(&e * &cond.growth)),
        Relation::Gt,
        QSqrt2::one(),
    ));
    steps.push(ChainStep::compare("c5 > 0", q2(&c5), Relation::Gt, QSqrt2::zero()));
    steps.extend(cond.steps(l0));
    steps.push(ChainStep::compare(
        "case coverage: c5/sqrt(l0) <= 1/6, i.e. l0 >= 36 c5^2",
        q2(&rat_int(l0 as i64)),
        Relation::Ge,
        q2(&(rat_int(36) * &c5 * &c5)),
    ));
    let chain = require(Certificate::new(
        format!("l0 = {l0} with c5 = {c5}, c6 = {c6}: conditions (1)-(4) hold and are monotone in l"),
        Witness::RationalChain { steps },
    ))?;
    let slack: Vec<SlackRow> = [l0, 2 * l0, 10 * l0].iter().map(|&l| cond.row(l)).collect();
    let case1 = relabel("case 1 at l0:", convexity_certificate(l0 as u32 + 9)?);
    Ok(L0Derivation {
        c5,
        c6,
        l0,
        slack,
        certificates: vec![chain, case1],
    })
}

/// Replays the four conditions at `l` for the given chain constants.
pub fn check_l(inputs: &ChainInputs, c5: &BigRational, c6: &BigRational, l: u64) -> SlackRow {
    Cond::new(inputs, c5.clone(), c6.clone()).row(l)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedCertificate {
    pub name: String,
    pub certificate: Certificate,
}

/// Every derived constant with its certificates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantLedger {
    #[serde(with = "rat_serde")]
    pub c0: BigRational,
    #[serde(with = "rat_serde")]
    pub c1: BigRational,
    #[serde(with = "rat_serde")]
    pub c2: BigRational,
    #[serde(with = "rat_serde")]
    pub c3: BigRational,
    #[serde(rename = "C4", with = "rat_serde")]
    pub c4: BigRational,
    #[serde(with = "rat_serde")]
    pub c5: BigRational,
    #[serde(with = "rat_serde")]
    pub c6: BigRational,
    pub l0: u64,
    #[serde(with = "rat_serde")]
    pub t4_max: BigRational,
    #[serde(with = "rat_serde")]
    pub t5_max: BigRational,
    pub faces: Vec<String>,
    pub slack: Vec<SlackRow>,
    pub certificates: Vec<NamedCertificate>,
}

impl ConstantLedger {
    pub fn inputs(&self) -> ChainInputs {
        ChainInputs {
            c0: self.c0.clone(),
            c1: self.c1.clone(),
            c2: self.c2.clone(),
            c3: self.c3.clone(),
            c4: self.c4.clone(),
        }
    }

    pub fn check_l(&self, l: u64) -> SlackRow {
        check_l(&self.inputs(), &self.c5, &self.c6, l)
    }

    /// Re-checks every certificate and the sign invariants.
    pub fn verify(&self) -> Result<()> {
        for nc in &self.certificates {
            nc.certificate.check()?;
        }
        let positive = [("c0", &self.c0), ("c1", &self.c1), ("c3", &self.c3), ("c5", &self.c5), ("c6", &self.c6)];
        if let Some((n, _)) = positive.iter().find(|(_, v)| !v.is_positive()) {
            return Err(Error::VerificationFailed(format!("{n} is not positive")));
        }
        if !self.c2.is_positive() || self.c2 > rat(1, 6) || self.c4.is_negative() {
            return Err(Error::VerificationFailed("c2 or C4 out of range".into()));
        }
        if let Some(row) = self.slack.iter().find(|r| !r.all_hold()) {
            return Err(Error::VerificationFailed(format!("slack negative at l = {}", row.l)));
        }
        Ok(())
    }

    /// Fixed-width summary for terminals.
    pub fn summary_table(&self) -> String {
        let mut s = String::new();
        let f = |x: &BigRational| x.to_f64().unwrap_or(f64::NAN);
        let _ = writeln!(s, "{:<6} {:>14}  exact", "const", "approx");
        for (n, v) in [
            ("c0", &self.c0),
            ("c1", &self.c1),
            ("c2", &self.c2),
            ("c3", &self.c3),
            ("C4", &self.c4),
            ("c5", &self.c5),
            ("c6", &self.c6),
        ] {
            let _ = writeln!(s, "{n:<6} {:>14.6e}  {v}", f(v));
        }
        let _ = writeln!(s, "{:<6} {:>14}", "l0", self.l0);
        for row in &self.slack {
            let _ = writeln!(s, "l = {}", row.l);
            for c in &row.conditions {
                let mark = if c.holds { "ok" } else { "FAIL" };
                let _ = writeln!(s, "  {mark:<4} slack {:>12.4e}  {}", c.slack, c.name);
            }
        }
        let ok = self.certificates.iter().filter(|c| c.certificate.verified).count();
        let _ = writeln!(s, "certificates verified: {ok}/{}", self.certificates.len());
        s
    }
}

/// Runs the whole chain in dependency order.
pub fn derive_constants() -> Result<ConstantLedger> {
    let mut certificates = Vec::new();
    let mut push = |name: &str, c: Certificate| {
        certificates.push(NamedCertificate {
            name: name.into(),
            certificate: c,
        })
    };
    let (c0, cert) = derive_c0()?;
    push("c0", cert);
    let (c1, certs) = derive_c1()?;
    for c in certs {
        push("c1", c);
    }
    let local = derive_c2_c3_c4(None)?;
    for c in local.certificates {
        push("c2_c3_C4", c);
    }
    let inputs = ChainInputs {
        c0: c0.clone(),
        c1: c1.clone(),
        c2: local.c2.clone(),
        c3: local.c3.clone(),
        c4: local.c4.clone(),
    };
    let l0 = derive_l0(&inputs)?;
    for c in l0.certificates {
        push("l0", c);
    }
    let ledger = ConstantLedger {
        c0,
        c1,
        c2: local.c2,
        c3: local.c3,
        c4: local.c4,
        c5: l0.c5,
        c6: l0.c6,
        l0: l0.l0,
        t4_max: local.t4_max,
        t5_max: local.t5_max,
        faces: local.faces,
        slack: l0.slack,
        certificates,
    };
    ledger.verify()?;
    Ok(ledger)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q_tilde_positive_at_nine_twentieths() {
        let (c0, cert) = derive_c0().unwrap();
        assert!(cert.verified);
        assert!(c0.is_positive());
        let v = q_tilde(&q_poly()).eval_f64(0.45);
        let c = c0.to_f64().unwrap();
        assert!(c <= v && v - c < 1e-11);
    }

    #[test]
    fn c2_is_largest_dyadic() {
        let (c2, cert) = choose_c2();
        assert!(cert.verified);
        assert_eq!(c2, rat(57, 512));
    }

    #[test]
    fn convexity_small_and_large() {
        assert!(convexity_certificate(9).unwrap().verified);
        assert!(convexity_certificate(2).unwrap().verified);
        let big = convexity_certificate(1000).unwrap();
        assert!(big.verified);
        assert_eq!(big.method, crate::exactpoly::Method::RationalChain);
    }

    #[test]
    fn identity_vii() {
        let c = factorization_identity().unwrap();
        assert!(c.verified);
    }

    #[test]
    fn flipped_q_fails_on_iii() {
        let neg = -&q_poly();
        let err = lemma_suite_with(&neg, &rat(1, 10)).unwrap_err();
        match err {
            Error::VerificationFailed(m) => assert!(m.starts_with("(iii)"), "{m}"),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn ledger_is_deterministic() {
        let a = serde_json::to_string(&derive_constants().unwrap()).unwrap();
        let b = serde_json::to_string(&derive_constants().unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sqrt_enclosures() {
        let u = sqrt_upper(2, 20);
        assert!(&u * &u >= rat_int(2));
        assert_eq!(sqrt_upper(9, 5), rat_int(3));
        let l = sqrt_lower(&rat(1, 3), 20);
        assert!(&l * &l <= rat(1, 3));
    }
}
