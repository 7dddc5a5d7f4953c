//! Conditional mean by the layer-cake identity and its signal derivative
//! `-int dH/dv`, compared with direct quadrature and a central difference.
//!
//! cargo run --example conditional_mean

use seqscreen::model::{
    conditional_mean, conditional_mean_derivative, conditional_mean_direct, ScreeningModel, Settings,
    SignalDistribution, ValuationKernel,
};

fn main() -> seqscreen::Result<()> {
    let model = ScreeningModel::new(SignalDistribution::uniform(0.5, 2.0)?, ValuationKernel::power())?;
    let settings = Settings::default();
    println!("{:>6} {:>12} {:>12} {:>12} {:>12} {:>12}", "v", "mean", "direct", "v/(v+1)", "d mean", "difference");
    for v in [0.75, 1.0, 1.25, 1.5, 1.75] {
        let mu = conditional_mean(&model, v, &settings)?;
        let direct = conditional_mean_direct(&model, v, &settings)?;
        let d = conditional_mean_derivative(&model, v, &settings)?;
        let h = 1e-5;
        let fd = (conditional_mean(&model, v + h, &settings)? - conditional_mean(&model, v - h, &settings)?) / (2.0 * h);
        println!("{v:>6.2} {mu:>12.9} {direct:>12.9} {:>12.9} {d:>12.9} {fd:>12.9}", v / (v + 1.0));
    }
    Ok(())
}
