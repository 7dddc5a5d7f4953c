//! Plugs a user-defined kernel into the checkers. Only `cdf` and `density` are
//! supplied, so `dH/dv` falls back to finite differences.
//!
//! cargo run --example custom_kernel

use std::sync::Arc;

use seqscreen::model::{CustomKernel, ScreeningModel, Settings, SignalDistribution, ValuationKernel};
use seqscreen::numerics::Interval;
use seqscreen::regularity::regularity_report;

/// `H_v(V) = V (1 - v (1 - V) / 2)` on `(0, 1)`, a valid CDF for `v` in `[0, 1]`.
#[derive(Debug)]
struct Quadratic;

impl CustomKernel for Quadratic {
    fn name(&self) -> &str {
        "quadratic tilt"
    }

    fn support(&self) -> Interval {
        Interval { lower: 0.0, upper: 1.0 }
    }

    fn cdf(&self, v: f64, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        x * (1.0 - 0.5 * v * (1.0 - x))
    }

    fn density(&self, v: f64, x: f64) -> f64 {
        if (0.0..=1.0).contains(&x) {
            1.0 - 0.5 * v + v * x
        } else {
            0.0
        }
    }

    fn admits_type(&self, v: f64) -> bool {
        (0.0..=1.0).contains(&v)
    }
}

fn main() -> seqscreen::Result<()> {
    let model = ScreeningModel::new(
        SignalDistribution::uniform(0.0, 1.0)?,
        ValuationKernel::custom(Arc::new(Quadratic)),
    )?;
    let report = regularity_report(&model, &Settings::default().with_grid(33, 33))?;
    for check in &report.checks {
        println!("{:<5} {}", check.assumption.name(), if check.pass { "pass" } else { "FAIL" });
    }
    if let Some(g) = report.gamma {
        println!("gamma ranges over [{:.4}, {:.4}]", g.min, g.max);
    }
    Ok(())
}
