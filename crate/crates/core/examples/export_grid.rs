//! Evaluates `gamma` and `psi` on a small lattice and writes them as CSV with
//! the same layout as the `grid` subcommand.
//!
//! cargo run --example export_grid > gamma_psi.csv

use seqscreen::model::{ScreeningModel, Settings, SignalDistribution, ValuationKernel};
use seqscreen::regularity::{evaluate_grid, Quantity};

fn main() -> seqscreen::Result<()> {
    let model = ScreeningModel::new(SignalDistribution::uniform(0.0, 1.0)?, ValuationKernel::exp_tilt())?;
    let eval = evaluate_grid(&model, &Settings::default().with_grid(9, 9))?;
    let gamma = eval.triples(Quantity::Gamma);
    let psi = eval.triples(Quantity::Psi);
    println!("v,V,gamma,psi");
    for ((v, x, g), (_, _, p)) in gamma.into_iter().zip(psi) {
        println!("{v:.16e},{x:.16e},{g:.16e},{p:.16e}");
    }
    Ok(())
}
