use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::function::beta::{beta_reg, ln_beta};

use crate::error::{Error, Result};
use crate::numerics::Interval;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalFamily {
    Uniform,
    Beta,
    Table,
}

/// CDF, survival and density of the signal at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignalPoint {
    pub cdf: f64,
    /// `1 - F`, computed without cancellation where the family allows it.
    pub survival: f64,
    pub density: f64,
}

/// Distribution `F` of the first-stage signal on a finite interval.
#[derive(Debug, Clone)]
pub struct SignalDistribution {
    support: Interval,
    repr: Repr,
}

#[derive(Debug, Clone)]
enum Repr {
    Uniform,
    Beta { alpha: f64, beta: f64, norm: f64 },
    Table(Arc<TableSignal>),
}

impl SignalDistribution {
    pub fn uniform(lower: f64, upper: f64) -> Result<Self> {
        Ok(Self {
            support: finite_support(lower, upper)?,
            repr: Repr::Uniform,
        })
    }

    /// Beta(`alpha`, `beta`) rescaled onto `[lower, upper]`.
    pub fn beta(alpha: f64, beta: f64, lower: f64, upper: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "beta shape parameters must be positive, got ({alpha}, {beta})"
            )));
        }
        let support = finite_support(lower, upper)?;
        Ok(Self {
            support,
            repr: Repr::Beta {
                alpha,
                beta,
                norm: ln_beta(alpha, beta).exp() * support.width(),
            },
        })
    }

    /// Tabulated density on strictly increasing `nodes`. Between nodes the
    /// density is interpolated log-linearly (linearly in cells touching a zero
    /// node); the table is normalized to unit mass.
    pub fn table(nodes: Vec<f64>, densities: Vec<f64>) -> Result<Self> {
        let table = TableSignal::new(nodes, densities)?;
        Ok(Self {
            support: Interval::new(table.nodes[0], *table.nodes.last().unwrap())?,
            repr: Repr::Table(Arc::new(table)),
        })
    }

    pub fn support(&self) -> Interval {
        self.support
    }

    pub fn family(&self) -> SignalFamily {
        match self.repr {
            Repr::Uniform => SignalFamily::Uniform,
            Repr::Beta { .. } => SignalFamily::Beta,
            Repr::Table(_) => SignalFamily::Table,
        }
    }

    /// Shape parameters (`[alpha, beta]` for beta, empty otherwise).
    pub fn params(&self) -> Vec<f64> {
        match &self.repr {
            Repr::Beta { alpha, beta, .. } => vec![*alpha, *beta],
            _ => Vec::new(),
        }
    }

    /// Raw `(nodes, densities)` of a table signal.
    pub fn table_data(&self) -> Option<(&[f64], &[f64])> {
        match &self.repr {
            Repr::Table(t) => Some((&t.nodes, &t.raw)),
            _ => None,
        }
    }

    /// Evaluates `F`, `1 - F` and `f` at `v` in the closed support.
    pub fn eval(&self, v: f64) -> Result<SignalPoint> {
        if !self.support.contains_closed(v) {
            return Err(Error::OutOfSupport {
                what: "signal",
                x: v,
                support: self.support,
            });
        }
        Ok(self.eval_unchecked(v))
    }

    fn eval_unchecked(&self, v: f64) -> SignalPoint {
        let Interval { lower, upper } = self.support;
        let width = self.support.width();
        match &self.repr {
            Repr::Uniform => SignalPoint {
                cdf: (v - lower) / width,
                survival: (upper - v) / width,
                density: 1.0 / width,
            },
            Repr::Beta { alpha, beta, norm } => {
                let x = ((v - lower) / width).clamp(0.0, 1.0);
                let y = ((upper - v) / width).clamp(0.0, 1.0);
                SignalPoint {
                    cdf: beta_reg(*alpha, *beta, x),
                    survival: beta_reg(*beta, *alpha, y),
                    density: x.powf(alpha - 1.0) * y.powf(beta - 1.0) / norm,
                }
            }
            Repr::Table(t) => t.eval(v),
        }
    }

    pub fn cdf(&self, v: f64) -> f64 {
        self.eval_unchecked(v.clamp(self.support.lower, self.support.upper)).cdf
    }

    pub fn density(&self, v: f64) -> f64 {
        if !self.support.contains_closed(v) {
            return 0.0;
        }
        self.eval_unchecked(v).density
    }
}

fn finite_support(lower: f64, upper: f64) -> Result<Interval> {
    if !(lower.is_finite() && upper.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "signal support must be finite, got [{lower}, {upper}]"
        )));
    }
    Ok(Interval::new(lower, upper)?)
}

#[derive(Debug)]
struct TableSignal {
    nodes: Vec<f64>,
    raw: Vec<f64>,
    /// Densities scaled to unit total mass.
    dens: Vec<f64>,
    /// Per-cell log slope `ln(f1/f0)`; `None` for linear cells.
    log_slope: Vec<Option<f64>>,
    /// Mass below node k.
    below: Vec<f64>,
    /// Mass above node k.
    above: Vec<f64>,
}

impl TableSignal {
    fn new(nodes: Vec<f64>, raw: Vec<f64>) -> Result<Self> {
        let n = nodes.len();
        if n < 2 || raw.len() != n {
            return Err(Error::InvalidParameter(format!(
                "table signal needs >= 2 nodes and matching densities (got {} and {})",
                n,
                raw.len()
            )));
        }
        if nodes.iter().chain(&raw).any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("table signal values must be finite".into()));
        }
        if let Some(i) = (1..n).find(|&i| nodes[i] <= nodes[i - 1]) {
            return Err(Error::InvalidParameter(format!(
                "table signal nodes must be strictly increasing (index {i})"
            )));
        }
        if raw.iter().any(|&f| f < 0.0) {
            return Err(Error::InvalidParameter("table signal densities must be >= 0".into()));
        }
        if let Some(i) = (1..n - 1).find(|&i| raw[i] <= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "table signal density must be positive at interior node {i}"
            )));
        }
        if n == 2 && raw[0] <= 0.0 && raw[1] <= 0.0 {
            return Err(Error::InvalidParameter("table signal has zero mass".into()));
        }

        let log_slope: Vec<Option<f64>> = (0..n - 1)
            .map(|k| {
                let (a, b) = (raw[k], raw[k + 1]);
                (a > 0.0 && b > 0.0).then(|| (b / a).ln())
            })
            .collect();
        let mut table = Self {
            nodes,
            dens: raw.clone(),
            raw,
            log_slope,
            below: Vec::new(),
            above: Vec::new(),
        };
        let masses: Vec<f64> = (0..n - 1).map(|k| table.cell_mass(k, 0.0, 1.0)).collect();
        let total: f64 = masses.iter().sum();
        table.dens.iter_mut().for_each(|f| *f /= total);
        let masses: Vec<f64> = masses.iter().map(|m| m / total).collect();

        table.below = std::iter::once(0.0)
            .chain(masses.iter().scan(0.0, |acc, m| {
                *acc += m;
                Some(*acc)
            }))
            .collect();
        let mut above = vec![0.0; n];
        for k in (0..n - 1).rev() {
            above[k] = above[k + 1] + masses[k];
        }
        table.above = above;
        Ok(table)
    }

    fn cell(&self, v: f64) -> (usize, f64) {
        let n = self.nodes.len();
        let k = self.nodes.partition_point(|&x| x <= v).saturating_sub(1).min(n - 2);
        let t = (v - self.nodes[k]) / (self.nodes[k + 1] - self.nodes[k]);
        (k, t.clamp(0.0, 1.0))
    }

    /// Mass of cell `k` between local coordinates `t0 <= t1`.
    fn cell_mass(&self, k: usize, t0: f64, t1: f64) -> f64 {
        let width = self.nodes[k + 1] - self.nodes[k];
        let (f0, f1) = (self.dens[k], self.dens[k + 1]);
        match self.log_slope[k] {
            Some(r) => {
                let z = r * (t1 - t0);
                let ratio = if z.abs() < 1e-12 { 1.0 + 0.5 * z } else { z.exp_m1() / z };
                f0 * width * (r * t0).exp() * (t1 - t0) * ratio
            }
            None => width * (f0 * (t1 - t0) + 0.5 * (f1 - f0) * (t1 * t1 - t0 * t0)),
        }
    }

    fn eval(&self, v: f64) -> SignalPoint {
        let (k, t) = self.cell(v);
        let (f0, f1) = (self.dens[k], self.dens[k + 1]);
        let density = match self.log_slope[k] {
            Some(r) => f0 * (r * t).exp(),
            None => f0 + (f1 - f0) * t,
        };
        SignalPoint {
            cdf: (self.below[k] + self.cell_mass(k, 0.0, t)).min(1.0),
            survival: (self.above[k + 1] + self.cell_mass(k, t, 1.0)).min(1.0),
            density,
        }
    }
}
