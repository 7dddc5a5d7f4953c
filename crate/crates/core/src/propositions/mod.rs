//! Claim-level verification suites. Each produces a [`PropositionReport`] with
//! named hypothesis and conclusion checks, numeric evidence and a verdict.

mod additive;
mod bounded;
mod delta;
mod hazard_normalization;

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

pub use additive::{verify_prop3, Direction, MEAN_TOL};
pub use bounded::{gamma_limit_trend, verify_prop2, GammaTrend};
pub use delta::{delta_diagnostic, DeltaField, DELTA_RESIDUAL_TOL};
pub use hazard_normalization::{verify_prop1, CONSTANT_HAZARD_TOL};

use crate::error::Error;
use crate::model::{ModelDescription, Settings};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Consistent,
    DiscrepancyFlagged,
    NotApplicable,
    HypothesisNotSatisfied,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Consistent => "consistent",
            Verdict::DiscrepancyFlagged => "discrepancy flagged",
            Verdict::NotApplicable => "not applicable",
            Verdict::HypothesisNotSatisfied => "hypothesis not satisfied",
        }
    }

    /// Process exit code: only a flagged discrepancy is non-zero.
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::DiscrepancyFlagged => 1,
            _ => 0,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Verdict {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

/// The three claims, addressed on the command line as 1, 2 and 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Claim {
    /// Some relabeling makes the hazard rate monotone.
    HazardNormalization,
    /// A bounded-below value support rules out A1 and A2 holding together.
    BoundedBelowExclusion,
    /// Under mean normalization, A1 and A2 single out additive full-support noise.
    AdditiveCharacterization,
}

impl Claim {
    pub fn number(self) -> u8 {
        match self {
            Claim::HazardNormalization => 1,
            Claim::BoundedBelowExclusion => 2,
            Claim::AdditiveCharacterization => 3,
        }
    }
}

impl FromStr for Claim {
    type Err = Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "1" => Ok(Claim::HazardNormalization),
            "2" => Ok(Claim::BoundedBelowExclusion),
            "3" => Ok(Claim::AdditiveCharacterization),
            other => Err(Error::InvalidParameter(format!("unknown claim `{other}` (expected 1, 2 or 3)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedCheck {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl NamedCheck {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvidenceTable {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl EvidenceTable {
    pub fn new(name: impl Into<String>, columns: &[&str], rows: Vec<Vec<f64>>) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropositionReport {
    pub claim: Claim,
    pub model: ModelDescription,
    pub hypotheses: Vec<NamedCheck>,
    /// Empty when a hypothesis failed.
    pub conclusions: Vec<NamedCheck>,
    /// Checks reported regardless of the hypotheses (alternative constructions,
    /// numerical identities).
    pub supplementary: Vec<NamedCheck>,
    pub evidence: Vec<EvidenceTable>,
    pub verdict: Verdict,
    pub notes: Vec<String>,
    pub settings: Settings,
}

impl PropositionReport {
    pub fn hypothesis(&self, name: &str) -> Option<&NamedCheck> {
        self.hypotheses.iter().find(|c| c.name == name)
    }

    pub fn conclusion(&self, name: &str) -> Option<&NamedCheck> {
        self.conclusions.iter().find(|c| c.name == name)
    }

    pub fn supplementary(&self, name: &str) -> Option<&NamedCheck> {
        self.supplementary.iter().find(|c| c.name == name)
    }

    pub fn table(&self, name: &str) -> Option<&EvidenceTable> {
        self.evidence.iter().find(|t| t.name == name)
    }
}

/// Evenly spread indices into a lattice of length `n`.
pub(crate) fn spread(n: usize, k: usize) -> Vec<usize> {
    if n == 0 {
        return Vec::new();
    }
    if k <= 1 || n == 1 {
        return vec![n / 2];
    }
    let mut out: Vec<usize> = (0..k).map(|i| i * (n - 1) / (k - 1)).collect();
    out.dedup();
    out
}
