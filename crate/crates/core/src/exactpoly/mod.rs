//! Exact arithmetic in `Q(sqrt 2)`, polynomials over it, Sturm sign
//! certification, root isolation and box subdivision for multivariate
//! rational polynomials. Every decision comes with a [`Certificate`] that
//! [`Certificate::check`] replays without trusting the prover.

pub mod certificate;
pub mod interval;
pub mod number;
pub mod poly;
pub mod sturm;

pub use certificate::{
    BoxClaim, Certificate, ChainStep, Method, RatInterval, Relation, SignOutcome, StepKind, Tree,
    Witness,
};
pub use interval::{abs_upper_bound_on_box, subdivision_positive_on_box};
pub use number::QSqrt2;
pub use poly::{ExactPoly, MultiPoly};
pub use sturm::{isolate_positive_root, sturm_sign_on_interval, SturmChain};

/// Exact sign of `a + b sqrt 2`.
pub fn an_sign(x: &QSqrt2) -> i8 {
    x.sign()
}

/// Horner evaluation at a rational point.
pub fn eval_exact(p: &ExactPoly, x: &num_rational::BigRational) -> QSqrt2 {
    p.eval_exact(x)
}
