use serde::Serialize;

use super::{Environment, GridSpec};
use crate::error::{Error, Result};
use crate::numerics::Interval;

/// `n` evenly spaced points on `support` shrunk by `margin * width` at each end.
pub fn uniform_lattice(support: Interval, n: usize, margin: f64) -> Vec<f64> {
    let width = support.width();
    let lo = support.lower + margin * width;
    let hi = support.upper - margin * width;
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            let mut pts: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
            pts[n - 1] = hi;
            pts
        }
    }
}

/// Where an infinite valuation support was cut to build the lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Truncation {
    pub applied: bool,
    pub tail_mass_cut: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueLattice {
    pub points: Vec<f64>,
    pub truncation: Truncation,
}

/// Valuation lattice shared by every signal on the grid.
///
/// An infinite end is replaced by the outermost `tail_mass_cut` quantile of the
/// conditionals at the first and last signal lattice points. Finite ends keep
/// the endpoint margin.
pub fn value_lattice(env: &(impl Environment + ?Sized), grid: &GridSpec) -> Result<ValueLattice> {
    let support = env.value_support();
    let vs = env.signal_lattice(grid)?;
    let (Some(&first), Some(&last)) = (vs.first(), vs.last()) else {
        return Err(Error::InvalidParameter("empty signal lattice".into()));
    };
    let ends = [env.conditional(first)?, env.conditional(last)?];
    let quantile = |p: f64| -> Result<Vec<f64>> {
        ends.iter()
            .map(|c| {
                c.quantile(p).filter(|q| q.is_finite()).ok_or_else(|| {
                    Error::InvalidParameter(format!(
                        "kernel `{}` has unbounded support but no quantile function",
                        env.kernel().label()
                    ))
                })
            })
            .collect()
    };
    let mut lo = support.lower;
    let mut hi = support.upper;
    let cut_lower = !lo.is_finite();
    let cut_upper = !hi.is_finite();
    if cut_lower {
        lo = quantile(grid.tail_mass_cut)?.into_iter().fold(f64::INFINITY, f64::min);
    }
    if cut_upper {
        hi = quantile(1.0 - grid.tail_mass_cut)?.into_iter().fold(f64::NEG_INFINITY, f64::max);
    }
    let span = hi - lo;
    if !(span > 0.0) {
        return Err(Error::InvalidParameter(format!("degenerate valuation range [{lo}, {hi}]")));
    }
    let a = if cut_lower { lo } else { lo + grid.endpoint_margin * span };
    let b = if cut_upper { hi } else { hi - grid.endpoint_margin * span };
    let points = uniform_lattice(Interval::new(a, b)?, grid.value_points, 0.0);
    Ok(ValueLattice {
        points,
        truncation: Truncation {
            applied: cut_lower || cut_upper,
            tail_mass_cut: grid.tail_mass_cut,
            lower: a,
            upper: b,
        },
    })
}
