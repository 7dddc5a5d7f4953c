//! Numerical checks for sequential-screening environments.
//!
//! A [`model::ScreeningModel`] pairs a signal distribution `F` on `[v_lo, v_hi]`
//! with conditional valuation distributions `H_v`. On top of it the crate
//! evaluates hazard rates, the ratio `gamma = -(dH/dv)/h` and the virtual value
//! `psi`, scans the regularity conditions on an interior lattice, relabels the
//! signal space, and runs claim-level verification suites.

pub mod cli;
pub mod error;
pub mod model;
pub mod numerics;
pub mod propositions;
pub mod regularity;
pub mod transforms;

pub use error::{Error, Result};
