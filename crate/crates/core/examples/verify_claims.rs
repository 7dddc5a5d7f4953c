//! Runs the three claim-level suites on the bundled model files and prints each
//! verdict with its named checks.
//!
//! cargo run --example verify_claims

use seqscreen::model::load_model_file;
use seqscreen::propositions::{verify_prop1, verify_prop2, verify_prop3, Direction, PropositionReport};
use seqscreen::transforms::instantiate;

fn show(file: &str, report: &PropositionReport) {
    println!("claim {} on {file}: {}", report.claim.number(), report.verdict);
    let groups = [("hypothesis", &report.hypotheses), ("conclusion", &report.conclusions), ("supplementary", &report.supplementary)];
    for (label, checks) in groups {
        for c in checks {
            println!("  {label:<13} {:<5} {}: {}", if c.pass { "pass" } else { "FAIL" }, c.name, c.detail);
        }
    }
}

fn main() -> seqscreen::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/models");
    for file in ["additive_logistic.toml", "power.toml", "exp_tilt.toml"] {
        let loaded = load_model_file(format!("{dir}/{file}"))?;
        let env = instantiate(&loaded)?;
        show(file, &verify_prop1(env.clone(), &loaded.settings)?);
        show(file, &verify_prop2(env.clone(), &loaded.settings)?);
        for direction in [Direction::Forward, Direction::Converse] {
            show(file, &verify_prop3(env.clone(), direction, &loaded.settings)?);
        }
    }
    Ok(())
}
