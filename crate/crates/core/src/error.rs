use thiserror::Error;

use crate::numerics::{Interval, NumericsError};

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Numerics(#[from] NumericsError),

    #[error("{what} {x} is outside the support {support}")]
    OutOfSupport {
        what: &'static str,
        x: f64,
        support: Interval,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("integral of {what} diverges near {endpoint}")]
    Integrability { what: String, endpoint: f64 },

    #[error("density underflow at v = {v}, V = {x}")]
    DensityUnderflow { v: f64, x: f64 },

    #[error(
        "v = {v} is too close to the upper signal endpoint (1 - F = {survival:e}); \
         increase endpoint_margin"
    )]
    NearEndpoint { v: f64, survival: f64 },

    #[error("relabeling construction failed: {0}")]
    Construction(String),

    #[error("relabeling self-check failed: {0}")]
    SelfCheck(String),

    #[error("evaluation failed at {failed} of {total} grid points ({region})")]
    Aborted {
        failed: usize,
        total: usize,
        region: String,
    },

    #[error("diagnostic cross-check failed at {failed} of {total} points ({region})")]
    Diagnostic {
        failed: usize,
        total: usize,
        region: String,
    },

    #[error("unknown key `{key}` in section [{section}]{}", at_line(.line))]
    UnknownKey {
        section: String,
        key: String,
        line: Option<usize>,
    },

    #[error("model file: {0}")]
    Load(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn at_line(line: &Option<usize>) -> String {
    line.map(|n| format!(" (line {n})")).unwrap_or_default()
}

pub type Result<T> = std::result::Result<T, Error>;
