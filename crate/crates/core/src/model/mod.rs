//! Screening environments: a signal distribution paired with a family of
//! conditional valuation distributions, plus evaluators for their primitive
//! functions and the conditional mean.

mod config;
mod file;
mod kernel;
mod lattice;
mod signal;

use std::fmt;

use serde::Serialize;

pub use config::{GridSpec, Settings, ToleranceConfig};
pub use file::{load_model_file, parse_model_file, write_model_file, LoadedModel, TransformRecord};
pub use kernel::{CustomKernel, DominatingBound, KernelFamily, Noise, NoiseFamily, ValuationKernel};
pub use lattice::{uniform_lattice, value_lattice, Truncation, ValueLattice};
pub use signal::{SignalDistribution, SignalFamily, SignalPoint};

use crate::error::{Error, Result};
use crate::numerics::{
    differentiate_within, integrate_with, Interval, NumericsError, Quadrature, StepPolicy,
};

/// `H_v(V)`, `h_v(V)` and `dH_v(V)/dv` at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelPoint {
    pub cdf: f64,
    pub density: f64,
    pub type_derivative: f64,
    /// `dH/dv >= 0` at an interior point: strict dominance fails here.
    pub fosd_violation: bool,
}

/// Identifies a model in reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelDescription {
    pub signal: String,
    pub signal_support: String,
    pub kernel: String,
    pub value_support: String,
    pub relabeling: Option<String>,
}

/// Anything with a signal distribution and a conditional valuation family.
///
/// Implemented by [`ScreeningModel`] and by relabeled models, so every checker
/// runs unchanged on either.
pub trait Environment: Send + Sync + fmt::Debug {
    fn signal_support(&self) -> Interval;

    fn signal_at(&self, v: f64) -> Result<SignalPoint>;

    /// The conditional valuation distribution given signal `v`.
    fn conditional(&self, v: f64) -> Result<Conditional<'_>>;

    fn kernel(&self) -> &ValuationKernel;

    /// Interior signal lattice for `grid`.
    fn signal_lattice(&self, grid: &GridSpec) -> Result<Vec<f64>>;

    fn describe(&self) -> ModelDescription;

    fn value_support(&self) -> Interval {
        self.kernel().support()
    }
}

/// The conditional distribution `H_v` for one fixed signal, possibly seen
/// through a relabeling of the signal space (`type_scale = dv/dw`).
#[derive(Debug, Clone, Copy)]
pub struct Conditional<'a> {
    kernel: &'a ValuationKernel,
    base_type: f64,
    type_range: Interval,
    type_scale: f64,
    label: f64,
    step: StepPolicy,
}

/// Value range actually integrated over, with any tail truncation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegrationRange {
    pub lower: f64,
    pub upper: f64,
    pub truncated_lower: bool,
    pub truncated_upper: bool,
}

impl<'a> Conditional<'a> {
    pub(crate) fn new(kernel: &'a ValuationKernel, base_type: f64, type_range: Interval) -> Self {
        Self {
            kernel,
            base_type,
            type_range,
            type_scale: 1.0,
            label: base_type,
            step: StepPolicy::default(),
        }
    }

    /// Re-indexes this slice by `label`, where `d(base type)/d(label) = scale`.
    pub(crate) fn relabeled(mut self, label: f64, scale: f64) -> Self {
        self.label = label;
        self.type_scale *= scale;
        self
    }

    pub fn with_step(mut self, step: StepPolicy) -> Self {
        self.step = step;
        self
    }

    /// Signal value in the coordinates of the environment that produced it.
    pub fn label(&self) -> f64 {
        self.label
    }

    /// Signal value in the coordinates of the underlying kernel.
    pub fn base_type(&self) -> f64 {
        self.base_type
    }

    pub fn support(&self) -> Interval {
        self.kernel.support()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.kernel.cdf(self.base_type, x)
    }

    pub fn density(&self, x: f64) -> f64 {
        self.kernel.density(self.base_type, x)
    }

    /// `dH/dv` in this slice's signal coordinates; finite differences when the
    /// family has no closed form.
    pub fn type_derivative(&self, x: f64) -> Result<f64> {
        let base = match self.kernel.analytic_type_derivative(self.base_type, x) {
            Some(d) => d,
            None => {
                differentiate_within(
                    |u| self.kernel.cdf(u, x),
                    self.base_type,
                    self.step,
                    self.type_range,
                )?
                .value
            }
        };
        Ok(base * self.type_scale)
    }

    /// All kernel primitives at interior valuation `x`.
    pub fn point(&self, x: f64) -> Result<KernelPoint> {
        let support = self.support();
        if !support.contains_open(x) {
            return Err(Error::OutOfSupport {
                what: "valuation",
                x,
                support,
            });
        }
        let type_derivative = self.type_derivative(x)?;
        Ok(KernelPoint {
            cdf: self.cdf(x),
            density: self.density(x),
            type_derivative,
            fosd_violation: type_derivative >= 0.0,
        })
    }

    pub fn quantile(&self, p: f64) -> Option<f64> {
        self.kernel.quantile(self.base_type, p)
    }

    /// Finite supports are used as declared; an infinite end is cut at the
    /// `tail_mass_cut` quantile when the family provides quantiles.
    pub fn integration_range(&self, tail_mass_cut: f64) -> IntegrationRange {
        let s = self.support();
        let mut range = IntegrationRange {
            lower: s.lower,
            upper: s.upper,
            truncated_lower: false,
            truncated_upper: false,
        };
        if !s.lower.is_finite() {
            if let Some(q) = self.quantile(tail_mass_cut).filter(|q| q.is_finite()) {
                range.lower = q;
                range.truncated_lower = true;
            }
        }
        if !s.upper.is_finite() {
            if let Some(q) = self.quantile(1.0 - tail_mass_cut).filter(|q| q.is_finite()) {
                range.upper = q;
                range.truncated_upper = true;
            }
        }
        range
    }

    /// Integrates `g` over `[lower, upper]`. Finite intervals pass through the
    /// quintic map `x = a + w u^3 (10 - 15u + 6u^2)`, which clusters nodes at
    /// both ends and tames integrable endpoint singularities.
    pub fn integrate_over<G>(&self, g: G, lower: f64, upper: f64, settings: &Settings) -> Result<Quadrature>
    where
        G: Fn(f64) -> f64,
    {
        let opts = settings.tolerances.quadrature();
        if lower.is_finite() && upper.is_finite() {
            let width = upper - lower;
            let mapped = |u: f64| {
                let u2 = u * u;
                let x = lower + width * u2 * u * (10.0 - 15.0 * u + 6.0 * u2);
                let jac = 30.0 * width * u2 * (1.0 - u) * (1.0 - u);
                if jac == 0.0 {
                    0.0
                } else {
                    g(x) * jac
                }
            };
            let q = integrate_with(mapped, Interval::new(0.0, 1.0)?, &opts).map_err(|e| match e {
                NumericsError::NonFinite { x } => NumericsError::NonFinite {
                    x: lower + width * x * x * x * (10.0 - 15.0 * x + 6.0 * x * x),
                },
                NumericsError::NonConvergent {
                    partial,
                    error,
                    lower: a,
                    upper: b,
                } => {
                    let map = |u: f64| lower + width * u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
                    NumericsError::NonConvergent {
                        partial,
                        error,
                        lower: map(a),
                        upper: map(b),
                    }
                }
                other => other,
            })?;
            Ok(q)
        } else {
            Ok(integrate_with(g, Interval::new(lower, upper)?, &opts)?)
        }
    }

    /// Integrates `g` against Lebesgue measure over the integration range.
    pub fn integrate<G>(&self, g: G, settings: &Settings) -> Result<Quadrature>
    where
        G: Fn(f64) -> f64,
    {
        let r = self.integration_range(settings.grid.tail_mass_cut);
        self.integrate_over(g, r.lower, r.upper, settings)
    }
}

/// A signal distribution together with its conditional valuation kernel.
#[derive(Debug, Clone)]
pub struct ScreeningModel {
    signal: SignalDistribution,
    kernel: ValuationKernel,
}

impl ScreeningModel {
    pub fn new(signal: SignalDistribution, kernel: ValuationKernel) -> Result<Self> {
        let s = signal.support();
        kernel.admits_type(s.lower)?;
        kernel.admits_type(s.upper)?;
        Ok(Self { signal, kernel })
    }

    pub fn signal(&self) -> &SignalDistribution {
        &self.signal
    }

    /// Numerical health checks on the grid: kernel normalization, `H` monotone
    /// in `V`, and the declared CDF against quadrature of the density.
    pub fn validate(&self, settings: &Settings) -> Result<()> {
        settings.validate()?;
        let lattice = self.signal_lattice(&settings.grid)?;
        let values = value_lattice(self, &settings.grid)?;
        for &v in &lattice {
            let c = self.conditional(v)?.with_step(settings.tolerances.derivative_step);
            let range = c.integration_range(settings.grid.tail_mass_cut);
            let mass = c.integrate(|x| c.density(x), settings)?.value;
            let expected = c.cdf(range.upper) - c.cdf(range.lower);
            if (mass - expected).abs() > NORMALIZATION_TOL || (expected - 1.0).abs() > NORMALIZATION_TOL + 2.0 * settings.grid.tail_mass_cut {
                return Err(Error::InvalidParameter(format!(
                    "kernel density integrates to {mass} at v = {v} (expected 1)"
                )));
            }
            let mut prev = f64::NEG_INFINITY;
            for &x in &values.points {
                let h = c.cdf(x);
                if h < prev {
                    return Err(Error::InvalidParameter(format!(
                        "H_v(V) decreases in V at v = {v}, V = {x}"
                    )));
                }
                prev = h;
            }
        }
        let s = self.signal.support();
        for k in 1..=4 {
            let v = s.lower + s.width() * f64::from(k) / 5.0;
            let quad = crate::numerics::integrate(
                |u| self.signal.density(u),
                Interval::new(s.lower, v)?,
                settings.tolerances.quadrature_rel,
            )?;
            let declared = self.signal.eval(v)?.cdf;
            if (quad.value - declared).abs() > NORMALIZATION_TOL {
                return Err(Error::InvalidParameter(format!(
                    "signal CDF {declared} disagrees with integrated density {} at v = {v}",
                    quad.value
                )));
            }
        }
        Ok(())
    }
}

/// Absolute tolerance for probability-mass consistency checks.
pub const NORMALIZATION_TOL: f64 = 1e-6;

impl Environment for ScreeningModel {
    fn signal_support(&self) -> Interval {
        self.signal.support()
    }

    fn signal_at(&self, v: f64) -> Result<SignalPoint> {
        self.signal.eval(v)
    }

    fn conditional(&self, v: f64) -> Result<Conditional<'_>> {
        let support = self.signal.support();
        if !support.contains_closed(v) {
            return Err(Error::OutOfSupport {
                what: "signal",
                x: v,
                support,
            });
        }
        Ok(Conditional::new(&self.kernel, v, support))
    }

    fn kernel(&self) -> &ValuationKernel {
        &self.kernel
    }

    fn signal_lattice(&self, grid: &GridSpec) -> Result<Vec<f64>> {
        Ok(uniform_lattice(self.signal.support(), grid.v_points, grid.endpoint_margin))
    }

    fn describe(&self) -> ModelDescription {
        let params = self.signal.params();
        let signal = if params.is_empty() {
            format!("{:?}", self.signal.family()).to_lowercase()
        } else {
            format!("{:?}{:?}", self.signal.family(), params).to_lowercase()
        };
        ModelDescription {
            signal,
            signal_support: self.signal.support().to_string(),
            kernel: self.kernel.label(),
            value_support: self.kernel.support().to_string(),
            relabeling: None,
        }
    }
}

/// `(F(v), f(v))` and the survival `1 - F(v)`.
pub fn eval_signal(env: &dyn Environment, v: f64) -> Result<SignalPoint> {
    env.signal_at(v)
}

/// `(H_v(V), h_v(V), dH_v(V)/dv)` with a dominance-violation flag.
pub fn eval_kernel(env: &dyn Environment, v: f64, x: f64) -> Result<KernelPoint> {
    env.conditional(v)?.point(x)
}

fn integrability(what: &str, range: IntegrationRange, err: Error) -> Error {
    match err {
        Error::Numerics(NumericsError::NonConvergent { lower, upper, .. }) => {
            let mid = 0.5 * (lower + upper);
            let endpoint = if (mid - range.lower).abs() <= (range.upper - mid).abs() {
                range.lower
            } else {
                range.upper
            };
            Error::Integrability {
                what: what.to_string(),
                endpoint,
            }
        }
        other => other,
    }
}

/// `E[V | v]` through the layer-cake identity, split at an interior point `c`:
/// `mu = c + int_c^hi (1 - H) - int_lo^c H`.
pub fn conditional_mean(env: &dyn Environment, v: f64, settings: &Settings) -> Result<f64> {
    let c = env.conditional(v)?.with_step(settings.tolerances.derivative_step);
    let range = c.integration_range(settings.grid.tail_mass_cut);
    let pivot = if range.lower.is_finite() && range.upper.is_finite() {
        0.5 * (range.lower + range.upper)
    } else {
        c.quantile(0.5).filter(|q| q.is_finite()).unwrap_or(0.0)
    };
    let upper = c
        .integrate_over(|x| 1.0 - c.cdf(x), pivot, range.upper, settings)
        .map_err(|e| integrability("conditional mean", range, e))?;
    let lower = c
        .integrate_over(|x| c.cdf(x), range.lower, pivot, settings)
        .map_err(|e| integrability("conditional mean", range, e))?;
    Ok(pivot + upper.value - lower.value)
}

/// `E[V | v]` by direct quadrature of `V h_v(V)`; cross-check for
/// [`conditional_mean`].
pub fn conditional_mean_direct(env: &dyn Environment, v: f64, settings: &Settings) -> Result<f64> {
    let c = env.conditional(v)?;
    let range = c.integration_range(settings.grid.tail_mass_cut);
    Ok(c
        .integrate(|x| x * c.density(x), settings)
        .map_err(|e| integrability("conditional mean", range, e))?
        .value)
}

/// `mu'(v) = -int dH_v(V)/dv dV` over the value support.
pub fn conditional_mean_derivative(env: &dyn Environment, v: f64, settings: &Settings) -> Result<f64> {
    let c = env.conditional(v)?.with_step(settings.tolerances.derivative_step);
    let range = c.integration_range(settings.grid.tail_mass_cut);
    let q = c
        .integrate(|x| -c.type_derivative(x).unwrap_or(f64::NAN), settings)
        .map_err(|e| integrability("type derivative of H", range, e))?;
    Ok(q.value)
}

/// Outcome of sampling a declared dominating bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundSpotCheck {
    pub bound: String,
    pub samples: usize,
    pub violations: usize,
    /// Largest `|dH/dv| - b(V)` seen (negative when the bound held everywhere).
    pub worst_excess: f64,
}

/// Samples a declared `b(V)` at 64 lattice pairs (8 signals x 8 values).
pub fn spot_check_dominating_bound(
    env: &dyn Environment,
    settings: &Settings,
) -> Result<Option<BoundSpotCheck>> {
    let Some(bound) = env.kernel().dominating_bound() else {
        return Ok(None);
    };
    let grid = GridSpec {
        v_points: 8,
        value_points: 8,
        ..settings.grid
    };
    let vs = env.signal_lattice(&grid)?;
    let xs = value_lattice(env, &grid)?.points;
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    for &v in &vs {
        let c = env.conditional(v)?.with_step(settings.tolerances.derivative_step);
        for &x in &xs {
            let excess = c.type_derivative(x)?.abs() - bound.eval(x);
            if excess > 0.0 {
                violations += 1;
            }
            worst = worst.max(excess);
        }
    }
    Ok(Some(BoundSpotCheck {
        bound: bound.name.clone(),
        samples: vs.len() * xs.len(),
        violations,
        worst_excess: worst,
    }))
}
