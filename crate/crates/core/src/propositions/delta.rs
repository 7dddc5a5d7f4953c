use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{uniform_lattice, value_lattice, Environment, Settings};
use crate::numerics::{differentiate_within, Interval};

/// Residual bound for the direct and factored `Delta_1`.
pub const DELTA_RESIDUAL_TOL: f64 = 1e-4;
/// Largest share of evaluable points allowed above the residual bound.
pub const DELTA_MAX_FAILED_FRACTION: f64 = 0.01;

/// `Delta(v, s) = H_v(s + v)` and its `v`-derivative on a `(v, s)` lattice.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaField {
    pub signals: Vec<f64>,
    pub shifts: Vec<f64>,
    /// Row-major in `v`.
    pub delta: Vec<f64>,
    /// Finite difference of `Delta` in `v`.
    pub direct: Vec<f64>,
    /// `h + dH/dv = h (1 - gamma)` at `V = s + v`.
    pub factored: Vec<f64>,
    /// `s + v` and its difference stencil lie inside the value support.
    pub evaluable: Vec<bool>,
    pub max_residual: f64,
    pub failed: usize,
    pub evaluable_count: usize,
}

impl DeltaField {
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.shifts.len() + j
    }

    pub fn max_abs_direct(&self) -> f64 {
        self.direct
            .iter()
            .zip(&self.evaluable)
            .filter(|(_, &e)| e)
            .fold(0.0, |m, (d, _)| m.max(d.abs()))
    }

    pub fn max_abs_factored(&self) -> f64 {
        self.factored
            .iter()
            .zip(&self.evaluable)
            .filter(|(_, &e)| e)
            .fold(0.0, |m, (d, _)| m.max(d.abs()))
    }
}

/// Builds the field over the signal lattice and shifts spanning
/// `[V_lo - v_hi, V_hi - v_lo]` on the value lattice, and cross-checks the two
/// `Delta_1` forms. More than 1% of evaluable points with a residual above
/// `1e-4` is a diagnostic failure.
pub fn delta_diagnostic(env: &(impl Environment + ?Sized), settings: &Settings) -> Result<DeltaField> {
    settings.validate()?;
    let signals = env.signal_lattice(&settings.grid)?;
    let values = value_lattice(env, &settings.grid)?.points;
    let (vlo, vhi) = (signals[0], signals[signals.len() - 1]);
    let (xlo, xhi) = (values[0], values[values.len() - 1]);
    let shift_range = Interval::new(xlo - vhi, xhi - vlo)?;
    let shifts = uniform_lattice(shift_range, settings.grid.value_points, 0.0);
    let support = env.value_support();
    let signal_support = env.signal_support();
    let step = settings.tolerances.derivative_step;

    let rows = signals
        .par_iter()
        .map(|&v| -> Result<Vec<(f64, f64, f64, bool)>> {
            let c = env.conditional(v)?.with_step(step);
            let h = step.step(v);
            shifts
                .iter()
                .map(|&s| {
                    let x = s + v;
                    if !(support.contains_open(x - h) && support.contains_open(x + h)) {
                        return Ok((c.cdf(x), 0.0, 0.0, false));
                    }
                    let p = c.point(x)?;
                    let factored = p.density + p.type_derivative;
                    let direct = differentiate_within(
                        |u| env.conditional(u).map(|cu| cu.cdf(s + u)).unwrap_or(f64::NAN),
                        v,
                        step,
                        signal_support,
                    )?
                    .value;
                    Ok((p.cdf, direct, factored, true))
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;

    let n = signals.len() * shifts.len();
    let mut field = DeltaField {
        delta: Vec::with_capacity(n),
        direct: Vec::with_capacity(n),
        factored: Vec::with_capacity(n),
        evaluable: Vec::with_capacity(n),
        signals,
        shifts,
        max_residual: 0.0,
        failed: 0,
        evaluable_count: 0,
    };
    let mut region = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (i, row) in rows.into_iter().enumerate() {
        for (j, (d, direct, factored, ok)) in row.into_iter().enumerate() {
            field.delta.push(d);
            field.direct.push(direct);
            field.factored.push(factored);
            field.evaluable.push(ok);
            if ok {
                field.evaluable_count += 1;
                let r = (direct - factored).abs() / factored.abs().max(1.0);
                field.max_residual = field.max_residual.max(r);
                if r > DELTA_RESIDUAL_TOL {
                    field.failed += 1;
                    let (v, s) = (field.signals[i], field.shifts[j]);
                    region = (region.0.min(v), region.1.max(v), region.2.min(s), region.3.max(s));
                }
            }
        }
    }
    if field.failed as f64 > DELTA_MAX_FAILED_FRACTION * field.evaluable_count as f64 {
        return Err(Error::Diagnostic {
            failed: field.failed,
            total: field.evaluable_count,
            region: format!("v in [{}, {}], s in [{}, {}]", region.0, region.1, region.2, region.3),
        });
    }
    Ok(field)
}
