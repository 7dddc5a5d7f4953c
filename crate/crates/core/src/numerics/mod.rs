//! Numeric substrate shared by every checker: adaptive quadrature on bounded
//! and unbounded intervals, Richardson-refined finite differences, and
//! monotone scans that return violation witnesses.

mod derivative;
mod interval;
mod monotone;
mod quadrature;

pub use derivative::{differentiate, differentiate_within, Derivative, StepPolicy};
pub use interval::Interval;
pub use monotone::{monotone_scan, monotone_violations, Direction, MonotoneVerdict, PairViolation};
pub use quadrature::{integrate, integrate_with, Quadrature, QuadratureOptions};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("invalid interval: lower {lower} must be below upper {upper}")]
    InvalidInterval { lower: f64, upper: f64 },

    #[error("function returned a non-finite value at x = {x}")]
    NonFinite { x: f64 },

    #[error(
        "quadrature did not converge (partial value {partial}, error estimate {error:e}); \
         worst subinterval [{lower}, {upper}]"
    )]
    NonConvergent {
        partial: f64,
        error: f64,
        lower: f64,
        upper: f64,
    },

    #[error("monotone scan needs at least 2 samples, got {0}")]
    TooFewSamples(usize),

    #[error("abscissae and values differ in length ({abscissae} vs {values})")]
    LengthMismatch { abscissae: usize, values: usize },

    #[error("abscissae must be strictly increasing (index {index})")]
    Unordered { index: usize },

    #[error("finite-difference stencil leaves the domain at x = {x}")]
    StencilOutOfDomain { x: f64 },
}

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}
