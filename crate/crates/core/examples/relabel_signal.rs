//! Relabels a signal whose hazard falls over most of its support and compares
//! the transformed hazard under three constructions.
//!
//! cargo run --example relabel_signal

use std::sync::Arc;

use seqscreen::model::{load_model_file, Environment, Settings};
use seqscreen::regularity::{check_assumption, Assumption};
use seqscreen::transforms::{relabel, transformed_hazard_profile, RelabelingKind};

fn main() -> seqscreen::Result<()> {
    let loaded = load_model_file(concat!(env!("CARGO_MANIFEST_DIR"), "/models/decreasing_hazard.toml"))?;
    let settings: Settings = loaded.settings;
    let base: Arc<dyn Environment> = Arc::new(loaded.model);
    println!("base model: A0 {}", verdict(check_assumption(base.as_ref(), Assumption::A0, &settings)?.pass));

    for kind in [RelabelingKind::IntegratedHazard, RelabelingKind::RunningmaxHazard, RelabelingKind::Affine] {
        let params: &[f64] = if kind == RelabelingKind::Affine { &[2.0, 0.0] } else { &[] };
        let tm = relabel(base.clone(), kind, params, &settings)?;
        let a0 = check_assumption(&tm, Assumption::A0, &settings)?;
        println!("{}: codomain {}, A0 {}", tm.relabeling().label(), tm.relabeling().codomain(), verdict(a0.pass));
        let profile = transformed_hazard_profile(&tm, &settings.grid)?;
        for (w, h) in profile.iter().step_by(profile.len() / 4) {
            println!("  w = {w:>10.5}  hazard = {h:>10.5}");
        }
    }
    Ok(())
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "FAIL"
    }
}
