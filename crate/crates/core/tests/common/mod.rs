#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use seqscreen::model::{
    load_model_file, Environment, LoadedModel, Noise, NoiseFamily, ScreeningModel, SignalDistribution, ValuationKernel,
};

pub fn uniform_additive(family: NoiseFamily) -> ScreeningModel {
    ScreeningModel::new(
        SignalDistribution::uniform(0.0, 1.0).unwrap(),
        ValuationKernel::additive(Noise::new(family, 1.0).unwrap()),
    )
    .unwrap()
}

pub fn logistic() -> ScreeningModel {
    uniform_additive(NoiseFamily::Logistic)
}

pub fn power(lower: f64, upper: f64) -> ScreeningModel {
    ScreeningModel::new(SignalDistribution::uniform(lower, upper).unwrap(), ValuationKernel::power()).unwrap()
}

pub fn exp_tilt() -> ScreeningModel {
    ScreeningModel::new(SignalDistribution::uniform(0.0, 1.0).unwrap(), ValuationKernel::exp_tilt()).unwrap()
}

pub fn shared(m: ScreeningModel) -> Arc<dyn Environment> {
    Arc::new(m)
}

pub fn model_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("models").join(name)
}

pub fn load(name: &str) -> LoadedModel {
    load_model_file(model_path(name)).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
