//! Scans A0, A1, A2, FOSD and PSI for two built-in models and prints the
//! worst witness of every failing check.
//!
//! cargo run --example regularity_check

use seqscreen::model::{Noise, NoiseFamily, ScreeningModel, Settings, SignalDistribution, ValuationKernel};
use seqscreen::regularity::regularity_report;

fn main() -> seqscreen::Result<()> {
    let settings = Settings::default();
    let models = [
        (
            "uniform signal, logistic noise",
            ScreeningModel::new(
                SignalDistribution::uniform(0.0, 1.0)?,
                ValuationKernel::additive(Noise::new(NoiseFamily::Logistic, 1.0)?),
            )?,
        ),
        (
            "uniform signal, power kernel",
            ScreeningModel::new(SignalDistribution::uniform(0.5, 2.0)?, ValuationKernel::power())?,
        ),
    ];
    for (name, model) in &models {
        let report = regularity_report(model, &settings)?;
        println!("{name}: ES-regular {}, PSI-regular {}", report.es_regular, report.psi_regular);
        for check in &report.checks {
            match check.witnesses.first() {
                None => println!("  {:<5} pass", check.assumption.name()),
                Some(w) => println!(
                    "  {:<5} FAIL {} witnesses, worst {:.3e} at v = {:.4}, V = {:.4}",
                    check.assumption.name(),
                    check.witnesses.len(),
                    w.magnitude,
                    w.from.v,
                    w.from.valuation.unwrap_or(f64::NAN)
                ),
            }
        }
    }
    Ok(())
}
