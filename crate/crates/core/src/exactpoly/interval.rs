//! Certified bounds of rational multivariate polynomials over boxes by
//! centered-form interval arithmetic and bisection.
//!
//! Boxes are processed level by level, in parallel within a level, so trees
//! and refutation points do not depend on scheduling.

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rayon::prelude::*;

use super::certificate::{
    split_box, BoxClaim, Certificate, CounterexampleWitness, RatInterval, SubdivisionWitness, Tree,
    Witness,
};
use super::number::ceil_dyadic;
use super::poly::{radius_power, MultiPoly};
use crate::error::{Error, Result};

pub const MAX_SUBDIVISION_DEPTH: u32 = 40;

/// Stop splitting once this many boxes have been examined.
pub const MAX_BOXES: usize = 1 << 20;

struct Eval {
    lo: BigRational,
    hi: BigRational,
    center_value: BigRational,
    center: Vec<BigRational>,
    axis: usize,
}

fn evaluate(f: &MultiPoly, domain: &[RatInterval]) -> Eval {
    let two = BigRational::from_integer(2.into());
    let center: Vec<BigRational> = domain.iter().map(|iv| (&iv.lo + &iv.hi) / &two).collect();
    let radius: Vec<BigRational> = domain.iter().map(|iv| (&iv.hi - &iv.lo) / &two).collect();
    let shifted = f.shift(&center);
    let c0 = shifted.constant_term();
    let (dlo, dhi) = super::poly::centered_remainder_bounds(&shifted, &radius);
    let mut weight = vec![BigRational::zero(); domain.len()];
    for (e, c) in shifted.terms() {
        let m = (c * radius_power(&radius, e)).abs();
        for (i, &k) in e.iter().enumerate() {
            if k > 0 {
                weight[i] += &m;
            }
        }
    }
    let mut axis = 0;
    for i in 1..weight.len() {
        if weight[i] > weight[axis] {
            axis = i;
        }
    }
    if weight.iter().all(Zero::is_zero) {
        // fall back to the widest side
        for i in 1..radius.len() {
            if radius[i] > radius[axis] {
                axis = i;
            }
        }
    }
    Eval {
        lo: &c0 + dlo,
        hi: &c0 + dhi,
        center_value: c0,
        center,
        axis,
    }
}

fn check_inputs(f: &MultiPoly, domain: &[RatInterval], max_depth: u32) -> Result<()> {
    if max_depth > MAX_SUBDIVISION_DEPTH {
        return Err(Error::InvalidConfig(format!(
            "max_depth {max_depth} exceeds {MAX_SUBDIVISION_DEPTH}"
        )));
    }
    if domain.len() != f.nvars() {
        return Err(Error::DimensionMismatch(format!(
            "box has {} sides for a polynomial in {} variables",
            domain.len(),
            f.nvars()
        )));
    }
    if let Some(iv) = domain.iter().find(|iv| iv.lo > iv.hi) {
        return Err(Error::InvalidInterval(format!("[{}, {}] is empty", iv.lo, iv.hi)));
    }
    Ok(())
}

enum Slot {
    Leaf(BigRational),
    Split(usize, usize, usize),
}

fn build_tree(slots: &[Option<Slot>], i: usize) -> Tree {
    match slots[i].as_ref().expect("every node is resolved") {
        Slot::Leaf(b) => Tree::Leaf { bound: b.clone() },
        Slot::Split(axis, l, r) => Tree::Split {
            axis: *axis,
            left: Box::new(build_tree(slots, *l)),
            right: Box::new(build_tree(slots, *r)),
        },
    }
}

/// Certifies `F >= 0` on the box, or refutes it with a point where exact
/// evaluation is negative.
pub fn subdivision_positive_on_box(
    f: &MultiPoly,
    domain: &[RatInterval],
    max_depth: u32,
) -> Result<(bool, Certificate)> {
    check_inputs(f, domain, max_depth)?;
    let mut slots: Vec<Option<Slot>> = vec![None];
    let mut frontier: Vec<(usize, Vec<RatInterval>)> = vec![(0, domain.to_vec())];
    let mut depth = 0;
    while !frontier.is_empty() {
        let evals: Vec<Eval> = frontier.par_iter().map(|(_, b)| evaluate(f, b)).collect();
        if let Some((k, e)) = evals.iter().enumerate().find(|(_, e)| e.center_value.is_negative()) {
            let w = CounterexampleWitness {
                poly: f.clone(),
                domain: frontier[k].1.clone(),
                point: e.center.clone(),
                value: e.center_value.clone(),
            };
            let claim = format!("F < 0 at ({})", join(&e.center));
            return Ok((false, Certificate::new(claim, Witness::Counterexample(w))));
        }
        let mut next = Vec::new();
        for ((idx, b), e) in frontier.into_iter().zip(evals) {
            if !e.lo.is_negative() {
                slots[idx] = Some(Slot::Leaf(e.lo));
                continue;
            }
            if depth >= max_depth || slots.len() >= MAX_BOXES {
                return Err(Error::DepthExhausted(max_depth));
            }
            let (l, r) = split_box(&b, e.axis);
            let li = slots.len();
            slots.push(None);
            slots.push(None);
            slots[idx] = Some(Slot::Split(e.axis, li, li + 1));
            next.push((li, l));
            next.push((li + 1, r));
        }
        frontier = next;
        depth += 1;
    }
    let w = SubdivisionWitness {
        poly: f.clone(),
        domain: domain.to_vec(),
        claim: BoxClaim::NonNegative,
        tree: build_tree(&slots, 0),
    };
    let claim = format!("F >= 0 on {}", show_box(domain));
    Ok((true, Certificate::new(claim, Witness::Subdivision(w))))
}

/// Certified upper bound of `|F|` on the box, rounded up to a multiple of
/// `2^-bits`. Boxes are split while their bound exceeds the best value seen
/// at box centers by more than the factor `1 + rel_tol`.
pub fn abs_upper_bound_on_box(
    f: &MultiPoly,
    domain: &[RatInterval],
    max_depth: u32,
    rel_tol: &BigRational,
    bits: u32,
) -> Result<(BigRational, Certificate)> {
    check_inputs(f, domain, max_depth)?;
    let one = BigRational::from_integer(1.into());
    let factor = &one + rel_tol;
    let mut slots: Vec<Option<Slot>> = vec![None];
    let mut frontier: Vec<(usize, Vec<RatInterval>)> = vec![(0, domain.to_vec())];
    let mut best_seen = BigRational::zero();
    let mut bound = BigRational::zero();
    let mut depth = 0;
    while !frontier.is_empty() {
        let evals: Vec<Eval> = frontier.par_iter().map(|(_, b)| evaluate(f, b)).collect();
        for e in &evals {
            let c = e.center_value.abs();
            if c > best_seen {
                best_seen = c;
            }
        }
        let target = &best_seen * &factor;
        let mut next = Vec::new();
        for ((idx, b), e) in frontier.into_iter().zip(evals) {
            let ub = if e.lo.abs() > e.hi.abs() { e.lo.abs() } else { e.hi.abs() };
            let flat = b.iter().all(RatInterval::is_point);
            if ub <= target || depth >= max_depth || slots.len() >= MAX_BOXES || flat {
                if ub > bound {
                    bound = ub.clone();
                }
                slots[idx] = Some(Slot::Leaf(ub));
                continue;
            }
            let (l, r) = split_box(&b, e.axis);
            let li = slots.len();
            slots.push(None);
            slots.push(None);
            slots[idx] = Some(Slot::Split(e.axis, li, li + 1));
            next.push((li, l));
            next.push((li + 1, r));
        }
        frontier = next;
        depth += 1;
    }
    let cap = ceil_dyadic(&bound, bits);
    let w = SubdivisionWitness {
        poly: f.clone(),
        domain: domain.to_vec(),
        claim: BoxClaim::AbsAtMost { bound: cap.clone() },
        tree: build_tree(&slots, 0),
    };
    let claim = format!("|F| <= {cap} on {}", show_box(domain));
    Ok((cap, Certificate::new(claim, Witness::Subdivision(w))))
}

fn join(xs: &[BigRational]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

fn show_box(domain: &[RatInterval]) -> String {
    domain
        .iter()
        .map(|iv| format!("[{}, {}]", iv.lo, iv.hi))
        .collect::<Vec<_>>()
        .join(" x ")
}
