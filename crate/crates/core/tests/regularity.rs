mod common;

use common::*;
use proptest::prelude::*;
use seqscreen::model::{
    conditional_mean_derivative, Environment, NoiseFamily, ScreeningModel, Settings, SignalDistribution,
    ValuationKernel,
};
use seqscreen::regularity::{
    check_assumption, conditional_gamma_mean, evaluate_grid, gamma, hazard, regularity_report, virtual_value,
    Assumption, Quantity,
};
use seqscreen::Error;

#[test]
fn hazard_reference_points() {
    let m = logistic();
    for (v, hz, inv) in [(0.5, 2.0, 0.5), (0.9, 10.0, 0.1)] {
        let h = hazard(&m, v).unwrap();
        assert!(rel(h.hazard, hz) < 1e-13 && rel(h.inverse_hazard, inv) < 1e-13);
        assert!((h.hazard * h.inverse_hazard - 1.0).abs() < 1e-12);
    }
    let b = ScreeningModel::new(SignalDistribution::beta(2.0, 2.0, 0.0, 1.0).unwrap(), ValuationKernel::exp_tilt()).unwrap();
    let h = hazard(&b, 0.5).unwrap();
    assert!(rel(h.hazard, 3.0) < 1e-13 && rel(h.inverse_hazard, 1.0 / 3.0) < 1e-13);
    assert!(matches!(hazard(&m, 1.0), Err(Error::NearEndpoint { .. })));
}

#[test]
fn gamma_reference_points() {
    for (v, x) in [(0.2, -3.0), (0.5, 0.5), (0.9, 4.0)] {
        assert_eq!(gamma(&logistic(), v, x).unwrap(), 1.0);
    }
    let pw = power(0.5, 2.0);
    // gamma = -(V ln V) / v
    let oracle = |v: f64, x: f64| -x * x.ln() / v;
    assert!(rel(gamma(&pw, 1.0, 0.5).unwrap(), oracle(1.0, 0.5)) < 1e-14);
    assert!((gamma(&pw, 1.0, 0.5).unwrap() - 0.346_57).abs() < 1e-5);
    assert!((gamma(&pw, 2.0, 0.5).unwrap() - 0.173_29).abs() < 1e-5);
}

#[test]
fn virtual_value_reference_points() {
    let m = logistic();
    assert!((virtual_value(&m, 0.5, 2.0).unwrap() - 1.5).abs() < 1e-14);
    assert!((virtual_value(&m, 1.0 - 1e-9, 2.0).unwrap() - 2.0).abs() < 1e-8);
    let pw = power(1.0, 2.0);
    let psi = virtual_value(&pw, 1.5, 0.5).unwrap();
    let oracle = 0.5 - 0.5 * (-0.5 * 0.5f64.ln() / 1.5);
    assert!((psi - oracle).abs() < 1e-14);
    assert!((psi - 0.384_48).abs() < 1e-5);
}

#[test]
fn logistic_passes_everything() {
    let r = regularity_report(&logistic(), &Settings::default()).unwrap();
    assert!(r.es_regular && r.psi_regular && r.all_pass(), "{:?}", r.failing());
    for c in &r.checks {
        assert!(c.witnesses.is_empty() && c.grid_relative);
        assert_eq!(c.points_evaluated, 129 * 129);
    }
}

#[test]
fn power_fails_a1_below_inverse_e_only() {
    let s = Settings::default();
    let r = regularity_report(&power(0.5, 2.0), &s).unwrap();
    assert!(!r.es_regular);
    let a1 = r.check(Assumption::A1);
    assert!(!a1.pass);
    let eval = evaluate_grid(&power(0.5, 2.0), &s).unwrap();
    let spacing = eval.values[1] - eval.values[0];
    for w in &a1.witnesses {
        let to = w.to.expect("A1 witnesses are pairs");
        assert!(to.valuation.unwrap() < (-1.0f64).exp() + spacing, "{w:?}");
    }
    assert!(r.check(Assumption::A2).pass);
    assert!(r.check(Assumption::Fosd).pass);
}

#[test]
fn table_clone_of_logistic_matches_analytic_verdicts() {
    // Type and value nodes share one spacing and contain every lattice point,
    // so the tabulated translation kernel is exact at the checked points.
    let margin = 1.0 / 32.0;
    let d = (1.0 - 2.0 * margin) / 16.0;
    let types: Vec<f64> = (0..19).map(|k| margin + (f64::from(k) - 1.0) * d).collect();
    let values: Vec<f64> = (0..545).map(|j| -14.5 + f64::from(j) * d).collect();
    let cdf: Vec<f64> = types
        .iter()
        .flat_map(|&v| values.iter().map(move |&x| 1.0 / (1.0 + (v - x).exp())))
        .collect();
    let table = ScreeningModel::new(
        SignalDistribution::uniform(0.0, 1.0).unwrap(),
        ValuationKernel::table(types, values, cdf).unwrap(),
    )
    .unwrap();
    let mut s = Settings::default().with_grid(17, 31);
    s.grid.endpoint_margin = margin;
    let analytic = regularity_report(&logistic(), &s).unwrap();
    let cloned = regularity_report(&table, &s).unwrap();
    for a in Assumption::ALL {
        assert_eq!(analytic.check(a).pass, cloned.check(a).pass, "{a}");
    }
    let g = cloned.gamma.unwrap();
    assert!((g.min - 1.0).abs() < 1e-9 && (g.max - 1.0).abs() < 1e-9, "{g:?}");
}

#[test]
fn gamma_is_positive_under_fosd() {
    let s = Settings::default().with_grid(33, 33);
    for m in [logistic(), uniform_additive(NoiseFamily::Normal), power(0.5, 2.0), exp_tilt()] {
        let eval = evaluate_grid(&m, &s).unwrap();
        assert!(check_assumption(&m, Assumption::Fosd, &s).unwrap().pass);
        for (v, x, g) in eval.triples(Quantity::Gamma) {
            assert!(g > 0.0, "{v} {x} {g}");
        }
    }
}

#[test]
fn gamma_mean_equals_mean_derivative() {
    let s = Settings::default();
    let tol = 10.0 * s.tolerances.quadrature_rel;
    for m in [logistic(), uniform_additive(NoiseFamily::Laplace), power(0.5, 2.0), exp_tilt()] {
        for v in m.signal_lattice(&s.grid.clone()).unwrap().into_iter().step_by(16) {
            let g = conditional_gamma_mean(&m, v, &s).unwrap();
            let d = conditional_mean_derivative(&m, v, &s).unwrap();
            assert!((g - d).abs() <= tol * d.abs().max(1.0), "{v}: {g} vs {d}");
        }
    }
}

#[test]
fn mean_normalized_regular_models_have_unit_gamma() {
    let s = Settings::default();
    for fam in [NoiseFamily::Logistic, NoiseFamily::Normal, NoiseFamily::Laplace] {
        let r = regularity_report(&uniform_additive(fam), &s).unwrap();
        let (a1, a2) = (r.check(Assumption::A1), r.check(Assumption::A2));
        assert!(a1.pass && a2.pass && a1.slack_consumed == 0.0 && a2.slack_consumed == 0.0);
        let g = r.gamma.unwrap();
        assert!((g.max - 1.0).abs() < 10.0 * s.tolerances.monotonicity_slack);
        assert!((g.min - 1.0).abs() < 10.0 * s.tolerances.monotonicity_slack);
    }
}

#[test]
fn reports_are_deterministic() {
    let s = Settings::default();
    let a = serde_json::to_string(&regularity_report(&exp_tilt(), &s).unwrap()).unwrap();
    let b = serde_json::to_string(&regularity_report(&exp_tilt(), &s).unwrap()).unwrap();
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn psi_identity(k in 0u8..3, a in 0.01f64..0.99, q in 0.01f64..0.99) {
        let m = match k { 0 => logistic(), 1 => power(0.5, 2.0), _ => exp_tilt() };
        let sup = m.signal_support();
        let v = sup.lower + a * sup.width();
        let x = m.conditional(v).unwrap().quantile(q).unwrap();
        let r = hazard(&m, v).unwrap().inverse_hazard;
        let g = gamma(&m, v, x).unwrap();
        let psi = virtual_value(&m, v, x).unwrap();
        prop_assert!((psi + r * g - x).abs() <= 4.0 * f64::EPSILON * (x.abs() + (r * g).abs()));
    }
}
