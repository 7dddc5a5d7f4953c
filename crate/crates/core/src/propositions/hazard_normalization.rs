use std::sync::Arc;

use super::{Claim, EvidenceTable, NamedCheck, PropositionReport, Verdict};
use crate::error::{Error, Result};
use crate::model::{Environment, Settings};
use crate::regularity::{check_assumption, hazard, Assumption};
use crate::transforms::{apply_relabeling, make_relabeling, transformed_hazard_profile, RelabelingKind, TransformedModel};

/// Allowed deviation of a hazard claimed to be constant at 1.
pub const CONSTANT_HAZARD_TOL: f64 = 1e-6;
/// Points with `1 - F` at or below this are left out of constant-hazard checks.
const SURVIVAL_CUT: f64 = 1e-6;

struct Profile {
    rows: Vec<Vec<f64>>,
    /// Largest `|hazard - 1|` where `1 - F > 1e-6`.
    max_dev_from_one: f64,
    a0: bool,
}

fn profile(tm: &TransformedModel, settings: &Settings) -> Result<Profile> {
    let base = tm.base();
    let mut rows = Vec::new();
    let mut max_dev: f64 = 0.0;
    for (w, h) in transformed_hazard_profile(tm, &settings.grid)? {
        let v = tm.relabeling().inverse(w)?;
        let survival = tm.signal_at(w)?.survival;
        let base_h = hazard(base.as_ref(), v)?.hazard;
        if survival > SURVIVAL_CUT {
            max_dev = max_dev.max((h - 1.0).abs());
        }
        rows.push(vec![v, w, h, base_h]);
    }
    let a0 = check_assumption(tm, Assumption::A0, settings)?.pass;
    Ok(Profile {
        rows,
        max_dev_from_one: max_dev,
        a0,
    })
}

const COLUMNS: [&str; 4] = ["v", "w", "transformed_hazard", "base_hazard"];

/// Builds the inverse-hazard-integral relabeling as constructed in the claim,
/// reports its transformed hazard, and compares it with the integrated-hazard
/// and running-max constructions.
pub fn verify_prop1(env: Arc<dyn Environment>, settings: &Settings) -> Result<PropositionReport> {
    let mut hypotheses = Vec::new();
    let mut conclusions = Vec::new();
    let mut supplementary = Vec::new();
    let mut evidence = Vec::new();
    let mut notes = Vec::new();
    let mut achieved = Vec::new();

    let ihi = match make_relabeling(env.clone(), RelabelingKind::InverseHazardIntegral, &[], settings) {
        Ok(r) => {
            hypotheses.push(NamedCheck::new(
                "inverse hazard integrable",
                true,
                format!("integral of (1 - F)/f over the signal support = {}", r.codomain().width()),
            ));
            Some(apply_relabeling(r)?)
        }
        Err(Error::Integrability { endpoint, .. }) => {
            hypotheses.push(NamedCheck::new(
                "inverse hazard integrable",
                false,
                format!("integral of (1 - F)/f diverges near v = {endpoint}"),
            ));
            None
        }
        Err(e) => return Err(e),
    };

    if let Some(tm) = &ihi {
        let p = profile(tm, settings)?;
        let squared = p
            .rows
            .iter()
            .map(|r| ((r[2] - r[3] * r[3]) / (r[3] * r[3])).abs())
            .fold(0.0, f64::max);
        conclusions.push(NamedCheck::new(
            "inverse-hazard relabeling satisfies A0",
            p.a0,
            "transformed inverse hazard scanned for weak decrease on the relabeled lattice",
        ));
        let constant = p.max_dev_from_one <= CONSTANT_HAZARD_TOL;
        conclusions.push(NamedCheck::new(
            "inverse-hazard relabeling has constant hazard 1",
            constant,
            format!("max |hazard - 1| = {:e} where 1 - F > 1e-6", p.max_dev_from_one),
        ));
        supplementary.push(NamedCheck::new(
            "transformed hazard equals base hazard squared",
            squared <= CONSTANT_HAZARD_TOL,
            format!("max relative deviation {squared:e}"),
        ));
        if !constant {
            notes.push(format!(
                "the relabeling with phi' = (1 - F)/f yields hazard (f/(1 - F))^2 composed with phi^-1, \
                 not the constant 1 asserted for it (max deviation {:e})",
                p.max_dev_from_one
            ));
        }
        if p.a0 {
            achieved.push(RelabelingKind::InverseHazardIntegral);
        }
        evidence.push(EvidenceTable::new("inverse_hazard_integral profile", &COLUMNS, p.rows));
    }

    let ih = apply_relabeling(make_relabeling(env.clone(), RelabelingKind::IntegratedHazard, &[], settings)?)?;
    let p = profile(&ih, settings)?;
    supplementary.push(NamedCheck::new(
        "integrated-hazard relabeling has constant hazard 1",
        p.max_dev_from_one <= CONSTANT_HAZARD_TOL,
        format!("max |hazard - 1| = {:e} where 1 - F > 1e-6", p.max_dev_from_one),
    ));
    if p.a0 {
        achieved.push(RelabelingKind::IntegratedHazard);
    }
    evidence.push(EvidenceTable::new("integrated_hazard profile", &COLUMNS, p.rows));

    let rm = apply_relabeling(make_relabeling(env.clone(), RelabelingKind::RunningmaxHazard, &[], settings)?)?;
    let p = profile(&rm, settings)?;
    supplementary.push(NamedCheck::new(
        "running-max relabeling satisfies A0",
        p.a0,
        format!("codomain {}", rm.relabeling().codomain()),
    ));
    if p.a0 {
        achieved.push(RelabelingKind::RunningmaxHazard);
    }
    evidence.push(EvidenceTable::new("runningmax_hazard profile", &COLUMNS, p.rows));

    let achievable = !achieved.is_empty();
    supplementary.push(NamedCheck::new(
        "A0 achievable by some relabeling",
        achievable,
        if achievable {
            format!("achieved by {}", achieved.iter().map(|k| k.name()).collect::<Vec<_>>().join(", "))
        } else {
            "no construction achieved A0 on the lattice".to_string()
        },
    ));

    let verdict = if ihi.is_none() {
        notes.push("the inverse-hazard construction is unavailable; the other constructions are reported".into());
        Verdict::HypothesisNotSatisfied
    } else if conclusions.iter().all(|c| c.pass) {
        Verdict::Consistent
    } else {
        Verdict::DiscrepancyFlagged
    };

    Ok(PropositionReport {
        claim: Claim::HazardNormalization,
        model: env.describe(),
        hypotheses,
        conclusions,
        supplementary,
        evidence,
        verdict,
        notes,
        settings: *settings,
    })
}
