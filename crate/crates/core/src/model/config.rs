use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{QuadratureOptions, StepPolicy};

/// Interior evaluation lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub v_points: usize,
    #[serde(rename = "V_points")]
    pub value_points: usize,
    /// Fraction of the support width excluded at each end.
    pub endpoint_margin: f64,
    /// Probability mass cut from each infinite tail of the valuation support.
    pub tail_mass_cut: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            v_points: 129,
            value_points: 129,
            endpoint_margin: 1e-4,
            tail_mass_cut: 1e-9,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.v_points == 0 || self.value_points == 0 {
            return Err(Error::InvalidParameter("grid point counts must be positive".into()));
        }
        if !(self.endpoint_margin > 0.0 && self.endpoint_margin < 0.5) {
            return Err(Error::InvalidParameter(format!(
                "endpoint_margin {} must lie in (0, 0.5)",
                self.endpoint_margin
            )));
        }
        if !(self.tail_mass_cut > 0.0 && self.tail_mass_cut <= 1e-3) {
            return Err(Error::InvalidParameter(format!(
                "tail_mass_cut {} must lie in (0, 1e-3]",
                self.tail_mass_cut
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceConfig {
    /// Absolute slack allowed per adjacent pair in every "weakly monotone" scan.
    pub monotonicity_slack: f64,
    pub quadrature_rel: f64,
    pub derivative_step: StepPolicy,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            monotonicity_slack: 1e-8,
            quadrature_rel: 1e-10,
            derivative_step: StepPolicy::default(),
        }
    }
}

impl ToleranceConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("monotonicity", self.monotonicity_slack),
            ("quadrature_rel", self.quadrature_rel),
            ("derivative_step.absolute", self.derivative_step.absolute),
            ("derivative_step.relative", self.derivative_step.relative),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {value}")));
            }
        }
        Ok(())
    }

    pub fn quadrature(&self) -> QuadratureOptions {
        QuadratureOptions::with_rel_tol(self.quadrature_rel)
    }
}

/// Grid plus tolerances: everything a verdict depends on besides the model.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Settings {
    pub grid: GridSpec,
    pub tolerances: ToleranceConfig,
}

impl Settings {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.tolerances.validate()
    }

    pub fn with_grid(mut self, v_points: usize, value_points: usize) -> Self {
        self.grid.v_points = v_points;
        self.grid.value_points = value_points;
        self
    }

    pub fn with_slack(mut self, slack: f64) -> Self {
        self.tolerances.monotonicity_slack = slack;
        self
    }
}
