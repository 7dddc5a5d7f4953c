use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;

use super::{spread, Claim, EvidenceTable, NamedCheck, PropositionReport, Verdict};
use crate::error::{Error, Result};
use crate::model::{conditional_mean, conditional_mean_direct, Environment, KernelFamily, Settings};
use crate::regularity::{check_on_grid, conditional_gamma_mean, evaluate_grid, Assumption, GridEvaluation, Quantity};

/// Allowed `|E[V | v] - v|`, relative to `max(1, |v|)`.
pub const MEAN_TOL: f64 = 1e-7;
/// Allowed `|gamma - 1|` for "gamma is identically 1".
pub const GAMMA_ONE_TOL: f64 = 1e-10;
/// Allowed spread of `H_v(s + v)` across `v` at a fixed shift `s`.
pub const TRANSLATION_TOL: f64 = 1e-8;
const SPOT_SIGNALS: usize = 5;
const SHIFT_QUANTILES: [f64; 9] = [0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Additive full-support noise implies A1 and A2.
    Forward,
    /// A1 and A2 imply additive full-support noise.
    Converse,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Forward => "forward",
            Direction::Converse => "converse",
        })
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forward" => Ok(Direction::Forward),
            "converse" => Ok(Direction::Converse),
            other => Err(Error::InvalidParameter(format!(
                "unknown direction `{other}` (expected forward or converse)"
            ))),
        }
    }
}

fn max_gamma_deviation(eval: &GridEvaluation) -> (f64, usize) {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (_, _, g) in eval.triples(Quantity::Gamma) {
        if g.is_finite() {
            worst = worst.max((g - 1.0).abs());
            count += 1;
        }
    }
    (worst, count)
}

fn gamma_one_check(eval: &GridEvaluation) -> NamedCheck {
    let (worst, count) = max_gamma_deviation(eval);
    NamedCheck::new(
        "gamma identically 1",
        count > 0 && worst <= GAMMA_ONE_TOL,
        format!("max |gamma - 1| = {worst:e} over {count} lattice points"),
    )
}

fn picks(eval: &GridEvaluation) -> Vec<f64> {
    spread(eval.signals.len(), SPOT_SIGNALS)
        .into_iter()
        .map(|i| eval.signals[i])
        .collect()
}

/// Runs the characterization in either direction. Both directions require the
/// conditional mean to equal the signal.
pub fn verify_prop3(env: Arc<dyn Environment>, direction: Direction, settings: &Settings) -> Result<PropositionReport> {
    let mut report = PropositionReport {
        claim: Claim::AdditiveCharacterization,
        model: env.describe(),
        hypotheses: Vec::new(),
        conclusions: Vec::new(),
        supplementary: Vec::new(),
        evidence: Vec::new(),
        verdict: Verdict::HypothesisNotSatisfied,
        notes: vec![format!("direction: {direction}")],
        settings: *settings,
    };
    let env = env.as_ref();
    let eval = evaluate_grid(env, settings)?;

    let mut mean_rows = Vec::new();
    let mut worst_mean: f64 = 0.0;
    for &v in &eval.signals {
        let mu = conditional_mean(env, v, settings)?;
        worst_mean = worst_mean.max((mu - v).abs() / v.abs().max(1.0));
        mean_rows.push(vec![v, mu]);
    }
    let normalized = worst_mean <= MEAN_TOL;
    report.hypotheses.push(NamedCheck::new(
        "mean normalized",
        normalized,
        format!("max |E[V | v] - v| / max(1, |v|) = {worst_mean:e}"),
    ));
    report
        .evidence
        .push(EvidenceTable::new("conditional mean", &["v", "mean"], mean_rows));
    if !normalized {
        report.notes.push("hypothesis fail: E[V|v] ≠ v; no conclusion asserted".into());
        return Ok(report);
    }

    let a1 = check_on_grid(&eval, Assumption::A1, settings);
    let a2 = check_on_grid(&eval, Assumption::A2, settings);
    let regular_detail = format!(
        "A1 {} ({} witnesses), A2 {} ({} witnesses)",
        if a1.pass { "passes" } else { "fails" },
        a1.witnesses.len(),
        if a2.pass { "passes" } else { "fails" },
        a2.witnesses.len()
    );

    match direction {
        Direction::Forward => {
            let additive =
                env.describe().relabeling.is_none() && env.kernel().family() == KernelFamily::AdditiveNoise;
            report.hypotheses.push(NamedCheck::new(
                "additive noise kernel",
                additive,
                format!("kernel {}", env.kernel().label()),
            ));
            if !additive {
                report.notes.push("the kernel is not additive noise; no conclusion asserted".into());
                return Ok(report);
            }
            report.conclusions.push(gamma_one_check(&eval));
            report
                .conclusions
                .push(NamedCheck::new("A1 and A2 hold", a1.pass && a2.pass, regular_detail));
            let mut rows = Vec::new();
            let mut worst: f64 = 0.0;
            for v in picks(&eval) {
                let m = conditional_gamma_mean(env, v, settings)?;
                worst = worst.max((m - 1.0).abs());
                rows.push(vec![v, m]);
            }
            report.conclusions.push(NamedCheck::new(
                "conditional mean of gamma equals 1",
                worst <= MEAN_TOL,
                format!("max |E[gamma | v] - 1| = {worst:e}"),
            ));
            report
                .evidence
                .push(EvidenceTable::new("conditional gamma mean", &["v", "E_gamma"], rows));
        }
        Direction::Converse => {
            let regular = a1.pass && a2.pass;
            report
                .hypotheses
                .push(NamedCheck::new("A1 and A2 hold", regular, regular_detail));
            if !regular {
                report
                    .notes
                    .push("hypothesis (A1∧A2) not satisfied; no conclusion asserted".into());
                return Ok(report);
            }
            report.conclusions.push(gamma_one_check(&eval));
            converse_conclusions(env, &eval, settings, &mut report)?;
        }
    }

    report.verdict = if report.conclusions.iter().all(|c| c.pass) {
        Verdict::Consistent
    } else {
        Verdict::DiscrepancyFlagged
    };
    Ok(report)
}

fn converse_conclusions(
    env: &dyn Environment,
    eval: &GridEvaluation,
    settings: &Settings,
    report: &mut PropositionReport,
) -> Result<()> {
    let spots = picks(eval);
    let mid = eval.signals[eval.signals.len() / 2];
    let reference = env.conditional(mid)?;
    let shifts: Vec<f64> = SHIFT_QUANTILES
        .iter()
        .filter_map(|&p| reference.quantile(p).map(|q| q - mid))
        .filter(|s| s.is_finite())
        .collect();
    let mut rows = Vec::new();
    let mut spread_max: f64 = 0.0;
    for &s in &shifts {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &v in &eval.signals {
            let c = env.conditional(v)?;
            let x = s + v;
            let h = if c.support().contains_open(x) {
                c.cdf(x)
            } else if x <= c.support().lower {
                0.0
            } else {
                1.0
            };
            lo = lo.min(h);
            hi = hi.max(h);
        }
        spread_max = spread_max.max(hi - lo);
        rows.push(vec![s, lo, hi]);
    }
    report.conclusions.push(NamedCheck::new(
        "translation invariant",
        !shifts.is_empty() && spread_max <= TRANSLATION_TOL,
        format!(
            "max over {} shifts s of the spread of H_v(s + v) across the signal lattice: {spread_max:e}",
            shifts.len()
        ),
    ));
    report
        .evidence
        .push(EvidenceTable::new("translation", &["s", "min_H", "max_H"], rows));

    let mut worst: f64 = 0.0;
    for &v in &spots {
        let mu = conditional_mean_direct(env, v, settings)?;
        worst = worst.max((mu - v).abs() / v.abs().max(1.0));
    }
    report.conclusions.push(NamedCheck::new(
        "noise mean zero",
        worst <= MEAN_TOL,
        format!("max |E[V - v | v]| / max(1, |v|) = {worst:e} by direct quadrature"),
    ));

    let support = env.value_support();
    let unbounded = !support.lower.is_finite() && !support.upper.is_finite();
    let cut = settings.grid.tail_mass_cut;
    let mut positive = true;
    let mut min_density = f64::INFINITY;
    for &v in &spots {
        let c = env.conditional(v)?;
        for p in [cut, 1.0 - cut] {
            match c.quantile(p) {
                Some(q) if q.is_finite() => {
                    let d = c.density(q);
                    min_density = min_density.min(d);
                    positive &= d > 0.0;
                }
                _ => positive = false,
            }
        }
    }
    report.conclusions.push(NamedCheck::new(
        "full support",
        unbounded && positive,
        format!("value support {support}; min density at the tail-cut quantiles {min_density:e}"),
    ));
    Ok(())
}
