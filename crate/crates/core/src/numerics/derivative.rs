use serde::{Deserialize, Serialize};

use super::{Interval, NumericsError};

/// Finite-difference step rule: `h = max(absolute, relative * |x|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepPolicy {
    pub absolute: f64,
    pub relative: f64,
}

impl Default for StepPolicy {
    fn default() -> Self {
        Self {
            absolute: 1e-5,
            relative: 1e-5,
        }
    }
}

impl StepPolicy {
    pub fn step(&self, x: f64) -> f64 {
        self.absolute.max(self.relative * x.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivative {
    pub value: f64,
    /// Heuristic uncertainty: Richardson disagreement plus a curvature
    /// consistency term that blows up at kinks.
    pub error: f64,
    pub step: f64,
    /// Set when `error` exceeds 1e-6 of `max(1, |value|)`.
    pub suspect: bool,
}

const SUSPECT_REL: f64 = 1e-6;

/// Central difference at `x` with one Richardson refinement (steps `h` and
/// `h/2`).
pub fn differentiate<F>(f: F, x: f64, policy: StepPolicy) -> Result<Derivative, NumericsError>
where
    F: Fn(f64) -> f64,
{
    central(&f, x, policy.step(x))
}

/// Like [`differentiate`], but keeps the stencil inside `domain`: the step is
/// shrunk toward the nearer edge, and a one-sided Richardson difference is
/// used when `x` sits on the edge.
pub fn differentiate_within<F>(
    f: F,
    x: f64,
    policy: StepPolicy,
    domain: Interval,
) -> Result<Derivative, NumericsError>
where
    F: Fn(f64) -> f64,
{
    if !domain.contains_closed(x) {
        return Err(NumericsError::StencilOutOfDomain { x });
    }
    let h = policy.step(x);
    let room = (x - domain.lower).min(domain.upper - x);
    if room >= h {
        return central(&f, x, h);
    }
    if room >= 0.25 * h {
        return central(&f, x, room);
    }
    let sign = if x - domain.lower < domain.upper - x {
        1.0
    } else {
        -1.0
    };
    one_sided(&f, x, h.min(0.5 * domain.width()), sign)
}

fn eval<F: Fn(f64) -> f64>(f: &F, x: f64) -> Result<f64, NumericsError> {
    let y = f(x);
    if y.is_finite() {
        Ok(y)
    } else {
        Err(NumericsError::NonFinite { x })
    }
}

fn central<F: Fn(f64) -> f64>(f: &F, x: f64, h: f64) -> Result<Derivative, NumericsError> {
    let half = 0.5 * h;
    let f0 = eval(f, x)?;
    let fp = eval(f, x + h)?;
    let fm = eval(f, x - h)?;
    let fph = eval(f, x + half)?;
    let fmh = eval(f, x - half)?;

    let d_full = (fp - fm) / (2.0 * h);
    let d_half = (fph - fmh) / h;
    let value = (4.0 * d_half - d_full) / 3.0;

    let curv_full = (fp - 2.0 * f0 + fm) / (h * h);
    let curv_half = (fph - 2.0 * f0 + fmh) / (half * half);
    let error = (value - d_half).abs() + half * (curv_half - curv_full).abs();

    Ok(Derivative {
        value,
        error,
        step: h,
        suspect: error > SUSPECT_REL * value.abs().max(1.0),
    })
}

fn one_sided<F: Fn(f64) -> f64>(
    f: &F,
    x: f64,
    h: f64,
    sign: f64,
) -> Result<Derivative, NumericsError> {
    let h = sign * h;
    let f0 = eval(f, x)?;
    let f1 = eval(f, x + h)?;
    let fh = eval(f, x + 0.5 * h)?;
    let d_full = (f1 - f0) / h;
    let d_half = (fh - f0) / (0.5 * h);
    let value = 2.0 * d_half - d_full;
    let error = (value - d_half).abs();
    Ok(Derivative {
        value,
        error,
        step: h.abs(),
        suspect: error > SUSPECT_REL * value.abs().max(1.0),
    })
}
