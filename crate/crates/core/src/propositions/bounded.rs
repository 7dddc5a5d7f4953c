use std::sync::Arc;

use serde::Serialize;

use super::{spread, Claim, EvidenceTable, NamedCheck, PropositionReport, Verdict};
use crate::error::{Error, Result};
use crate::model::{value_lattice, Environment, Settings};
use crate::regularity::{check_on_grid, evaluate_grid, gamma, Assumption, Quantity};
use crate::transforms::{relabel, RelabelingKind};

/// Offsets above the lower value bound, as fractions of the value span.
pub const LIMIT_OFFSETS: [f64; 3] = [1e-2, 1e-3, 1e-4];
/// Slopes of the affine relabelings used to rescale `gamma`.
pub const AFFINE_SLOPES: [f64; 3] = [1.0, 0.5, 0.25];
const AFFINE_TOL: f64 = 1e-8;

/// `gamma(v, .)` sampled while `V` approaches the lower value bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaTrend {
    pub v: f64,
    /// `(V, gamma)` in order of decreasing `V`.
    pub samples: Vec<(f64, f64)>,
    /// Direction of `gamma` as `V` decreases toward the bound: "increasing",
    /// "decreasing", "constant" or "mixed". A sampled trend, not a limit.
    pub trend: &'static str,
}

pub fn gamma_limit_trend(env: &(impl Environment + ?Sized), v: f64, settings: &Settings) -> Result<GammaTrend> {
    let support = env.value_support();
    if !support.lower.is_finite() {
        return Err(Error::InvalidParameter("value support is unbounded below".into()));
    }
    let top = if support.upper.is_finite() {
        support.upper
    } else {
        value_lattice(env, &settings.grid)?.truncation.upper
    };
    let span = top - support.lower;
    let samples = LIMIT_OFFSETS
        .iter()
        .map(|&k| {
            let x = support.lower + k * span;
            Ok((x, gamma(env, v, x)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let steps: Vec<f64> = samples.windows(2).map(|p| p[1].1 - p[0].1).collect();
    let scale = samples.iter().fold(0.0f64, |m, s| m.max(s.1.abs())).max(f64::MIN_POSITIVE);
    let tiny = |d: f64| d.abs() <= 1e-12 * scale;
    let trend = if steps.iter().all(|&d| tiny(d)) {
        "constant"
    } else if steps.iter().all(|&d| d > 0.0 || tiny(d)) {
        "increasing"
    } else if steps.iter().all(|&d| d < 0.0 || tiny(d)) {
        "decreasing"
    } else {
        "mixed"
    };
    Ok(GammaTrend { v, samples, trend })
}

/// Checks that A1 and A2 do not both hold when the value support is bounded
/// below, with the supporting `gamma` trend, `Delta_1` signs and the effect of
/// affine rescaling on `gamma`.
pub fn verify_prop2(env: Arc<dyn Environment>, settings: &Settings) -> Result<PropositionReport> {
    let support = env.value_support();
    let mut report = PropositionReport {
        claim: Claim::BoundedBelowExclusion,
        model: env.describe(),
        hypotheses: Vec::new(),
        conclusions: Vec::new(),
        supplementary: Vec::new(),
        evidence: Vec::new(),
        verdict: Verdict::NotApplicable,
        notes: Vec::new(),
        settings: *settings,
    };
    let bounded = support.lower.is_finite();
    report.hypotheses.push(NamedCheck::new(
        "value support bounded below",
        bounded,
        format!("value support {support}"),
    ));
    if !bounded {
        report.notes.push("hypothesis not applicable: the value support is unbounded below".into());
        return Ok(report);
    }

    let eval = evaluate_grid(env.as_ref(), settings)?;
    let fosd = check_on_grid(&eval, Assumption::Fosd, settings);
    report.hypotheses.push(NamedCheck::new(
        "strict dominance on the lattice",
        fosd.pass,
        format!("{} violating points", fosd.witnesses.len()),
    ));
    if !fosd.pass {
        report.verdict = Verdict::HypothesisNotSatisfied;
        return Ok(report);
    }

    let a1 = check_on_grid(&eval, Assumption::A1, settings);
    let a2 = check_on_grid(&eval, Assumption::A2, settings);
    let describe = |c: &crate::regularity::CheckReport| match c.witnesses.first() {
        None => format!("{} passes", c.assumption),
        Some(w) => format!(
            "{} fails ({} witnesses, worst {:e} at v = {}, V = {})",
            c.assumption,
            c.witnesses.len(),
            w.magnitude,
            w.from.v,
            w.from.valuation.unwrap_or(f64::NAN)
        ),
    };
    let excluded = !(a1.pass && a2.pass);
    report.conclusions.push(NamedCheck::new(
        "A1 and A2 not both satisfied",
        excluded,
        format!("{}; {}", describe(&a1), describe(&a2)),
    ));

    // gamma near the lower bound and its response to affine rescaling
    let picks: Vec<f64> = spread(eval.signals.len(), 3).into_iter().map(|i| eval.signals[i]).collect();
    let mut trend_rows = Vec::new();
    let mut trends = Vec::new();
    for &v in &picks {
        let t = gamma_limit_trend(env.as_ref(), v, settings)?;
        trend_rows.extend(t.samples.iter().map(|&(x, g)| vec![v, x, g]));
        trends.push(format!("v = {v}: {}", t.trend));
    }
    report.notes.push(format!("gamma as V decreases to {}: {}", support.lower, trends.join("; ")));
    report.evidence.push(EvidenceTable::new("gamma near lower value bound", &["v", "V", "gamma"], trend_rows.clone()));

    let mut affine_rows = Vec::new();
    let mut worst: f64 = 0.0;
    for &slope in &AFFINE_SLOPES {
        let tm = relabel(env.clone(), RelabelingKind::Affine, &[slope, 0.0], settings)?;
        for row in &trend_rows {
            let (v, x, g) = (row[0], row[1], row[2]);
            let gt = gamma(&tm, slope * v, x)?;
            worst = worst.max((gt * slope - g).abs() / g.abs().max(1e-300));
            affine_rows.push(vec![slope, v, x, g, gt]);
        }
    }
    report.supplementary.push(NamedCheck::new(
        "affine slope a rescales gamma by 1/a",
        worst <= AFFINE_TOL,
        format!("max relative deviation of a * gamma~ from gamma: {worst:e}"),
    ));
    report.evidence.push(EvidenceTable::new(
        "affine rescaling",
        &["slope", "v", "V", "gamma", "gamma_tilde"],
        affine_rows,
    ));

    match super::delta_diagnostic(env.as_ref(), settings) {
        Ok(field) => {
            let (mut pos, mut neg, mut zero) = (0usize, 0usize, 0usize);
            for (k, &ok) in field.evaluable.iter().enumerate() {
                if ok {
                    let d = field.factored[k];
                    if d > 0.0 {
                        pos += 1;
                    } else if d < 0.0 {
                        neg += 1;
                    } else {
                        zero += 1;
                    }
                }
            }
            report.supplementary.push(NamedCheck::new(
                "Delta_1 cross-check",
                true,
                format!(
                    "{} of {} evaluable points above residual 1e-4 (max residual {:e}); signs: {pos} positive, \
                     {neg} negative, {zero} zero",
                    field.failed, field.evaluable_count, field.max_residual
                ),
            ));
            let mut rows = Vec::new();
            for i in spread(field.signals.len(), 9) {
                for j in spread(field.shifts.len(), 9) {
                    let k = field.index(i, j);
                    if field.evaluable[k] {
                        let d = field.factored[k];
                        rows.push(vec![field.signals[i], field.shifts[j], field.delta[k], d, d.signum()]);
                    }
                }
            }
            report.evidence.push(EvidenceTable::new(
                "Delta_1 sign map",
                &["v", "s", "Delta", "Delta_1", "sign"],
                rows,
            ));
        }
        Err(Error::Diagnostic { failed, total, region }) => {
            report.supplementary.push(NamedCheck::new(
                "Delta_1 cross-check",
                false,
                format!("{failed} of {total} evaluable points above residual 1e-4 in {region}"),
            ));
        }
        Err(e) => return Err(e),
    }

    report.verdict = if excluded {
        Verdict::Consistent
    } else {
        let rows = eval
            .triples(Quantity::Gamma)
            .into_iter()
            .map(|(v, x, g)| vec![v, x, g])
            .collect();
        report.evidence.push(EvidenceTable::new("gamma field", &["v", "V", "gamma"], rows));
        Verdict::DiscrepancyFlagged
    };
    Ok(report)
}
