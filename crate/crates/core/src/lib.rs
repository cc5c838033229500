//! Monochromatic-solution functionals for homogeneous linear systems over
//! `F_p^n`, projected-gradient search for colourings that violate
//! commonness-type properties, exact polynomial inequality certificates in
//! `Q(sqrt 2)`, and a certified derivation of the explicit constants that make
//! the nine-variable system `Phi^(l)` common for every `l >= l0`.

pub mod certify;
pub mod counting;
pub mod error;
pub mod exactpoly;
pub mod harmonic;
pub mod linsys;
pub mod optimize;
pub mod report;

pub use error::{Error, Result};
pub use harmonic::{GroupFunction, Spectrum};
pub use linsys::LinearSystem;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
