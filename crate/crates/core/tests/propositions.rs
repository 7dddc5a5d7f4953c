mod common;

use std::sync::Arc;

use common::*;
use seqscreen::model::{Environment, NoiseFamily, ScreeningModel, Settings, SignalDistribution, ValuationKernel};
use seqscreen::propositions::{
    delta_diagnostic, gamma_limit_trend, verify_prop1, verify_prop2, verify_prop3, Claim, Direction, Verdict,
};
use seqscreen::regularity::conditional_gamma_mean;
use seqscreen::transforms::{instantiate, relabel, RelabelingKind};

fn column(report: &seqscreen::propositions::PropositionReport, table: &str, col: usize) -> Vec<f64> {
    report.table(table).unwrap().rows.iter().map(|r| r[col]).collect()
}

#[test]
fn prop1_on_uniform_flags_the_constant_hazard_claim() {
    let r = verify_prop1(shared(logistic()), &Settings::default()).unwrap();
    assert_eq!(r.claim, Claim::HazardNormalization);
    assert!(r.hypothesis("inverse hazard integrable").unwrap().pass);
    assert!(r.conclusion("inverse-hazard relabeling satisfies A0").unwrap().pass);
    assert!(!r.conclusion("inverse-hazard relabeling has constant hazard 1").unwrap().pass);
    assert_eq!(r.verdict, Verdict::DiscrepancyFlagged);
    assert!(r.supplementary("integrated-hazard relabeling has constant hazard 1").unwrap().pass);
    assert!(r.supplementary("running-max relabeling satisfies A0").unwrap().pass);
    assert!(r.supplementary("A0 achievable by some relabeling").unwrap().pass);
    // 1/(1 - 2w) oracle for the inverse-hazard profile
    let t = r.table("inverse_hazard_integral profile").unwrap();
    for row in &t.rows {
        let (w, h) = (row[1], row[2]);
        if 1.0 - row[0] > 1e-6 {
            assert!(rel(h, 1.0 / (1.0 - 2.0 * w)) <= 1e-6, "{w}: {h}");
        }
    }
    let running = column(&r, "runningmax_hazard profile", 2);
    assert!(running.windows(2).all(|p| p[1] >= p[0] - 1e-12));
}

#[test]
fn prop1_on_beta_reports_divergence_and_runningmax() {
    let b = ScreeningModel::new(SignalDistribution::beta(2.0, 2.0, 0.0, 1.0).unwrap(), ValuationKernel::exp_tilt()).unwrap();
    let r = verify_prop1(shared(b), &Settings::default()).unwrap();
    assert!(!r.hypothesis("inverse hazard integrable").unwrap().pass);
    assert!(r.conclusions.is_empty());
    assert_eq!(r.verdict, Verdict::HypothesisNotSatisfied);
    assert_eq!(r.verdict.exit_code(), 0);
    assert!(r.supplementary("running-max relabeling satisfies A0").unwrap().pass);
    assert!(r.table("inverse_hazard_integral profile").is_none());
}

#[test]
fn prop1_on_unit_exponential_table_is_consistent() {
    let loaded = load("exponential_table.toml");
    let r = verify_prop1(instantiate(&loaded).unwrap(), &loaded.settings).unwrap();
    assert!(r.conclusion("inverse-hazard relabeling has constant hazard 1").unwrap().pass, "{:?}", r.conclusions);
    assert_eq!(r.verdict, Verdict::Consistent);
}

#[test]
fn prop2_bounded_families_are_consistent() {
    let s = Settings::default();
    for m in [power(0.5, 2.0), exp_tilt()] {
        let r = verify_prop2(shared(m), &s).unwrap();
        assert_eq!(r.verdict, Verdict::Consistent, "{:?}", r.conclusions);
        assert!(r.conclusion("A1 and A2 not both satisfied").unwrap().pass);
        assert!(r.supplementary("Delta_1 cross-check").unwrap().pass);
        assert!(r.supplementary("affine slope a rescales gamma by 1/a").unwrap().pass);
        assert!(r.table("Delta_1 sign map").is_some());
        assert_eq!(r.table("gamma near lower value bound").unwrap().rows.len(), 9);
        assert!(r.table("gamma field").is_none());
    }
    let r = verify_prop2(shared(power(0.5, 2.0)), &s).unwrap();
    let detail = &r.conclusion("A1 and A2 not both satisfied").unwrap().detail;
    assert!(detail.contains("A1 fails") && detail.contains("A2 passes"), "{detail}");
}

#[test]
fn prop2_is_not_applicable_on_the_real_line() {
    for fam in [NoiseFamily::Logistic, NoiseFamily::Normal, NoiseFamily::Laplace] {
        let r = verify_prop2(shared(uniform_additive(fam)), &Settings::default()).unwrap();
        assert_eq!(r.verdict, Verdict::NotApplicable);
        assert!(r.conclusions.is_empty());
        assert!(!r.hypothesis("value support bounded below").unwrap().pass);
    }
}

#[test]
fn gamma_trend_near_the_lower_bound_of_the_power_kernel() {
    // gamma = -V ln V / v falls to 0 as V decreases to 0
    let m = power(0.5, 2.0);
    let t = gamma_limit_trend(&m, 1.0, &Settings::default()).unwrap();
    assert_eq!(t.trend, "decreasing");
    for (x, g) in t.samples {
        assert!(rel(g, -x * x.ln()) < 1e-12);
    }
    assert!(gamma_limit_trend(&logistic(), 0.5, &Settings::default()).is_err());
}

#[test]
fn delta_field_of_additive_kernels() {
    for fam in [NoiseFamily::Logistic, NoiseFamily::Normal, NoiseFamily::Laplace] {
        let f = delta_diagnostic(&uniform_additive(fam), &Settings::default()).unwrap();
        assert_eq!(f.max_abs_factored(), 0.0);
        assert!(f.max_abs_direct() <= 1e-8, "{:?} {}", fam, f.max_abs_direct());
    }
    let f = delta_diagnostic(&power(0.5, 2.0), &Settings::default()).unwrap();
    assert!(f.failed * 100 <= f.evaluable_count);
}

#[test]
fn prop3_additive_models_pass_both_directions() {
    let s = Settings::default();
    for fam in [NoiseFamily::Normal, NoiseFamily::Logistic, NoiseFamily::Laplace] {
        let env = shared(uniform_additive(fam));
        let fwd = verify_prop3(env.clone(), Direction::Forward, &s).unwrap();
        assert_eq!(fwd.verdict, Verdict::Consistent, "{:?}", fwd.conclusions);
        let conv = verify_prop3(env, Direction::Converse, &s).unwrap();
        assert_eq!(conv.verdict, Verdict::Consistent, "{:?}", conv.conclusions);
        for name in ["gamma identically 1", "translation invariant", "noise mean zero", "full support"] {
            assert!(conv.conclusion(name).unwrap().pass, "{name}");
        }
    }
}

#[test]
fn prop3_mean_relabeled_power_kernel_fails_the_converse_hypothesis() {
    let s = Settings::default();
    let tm = relabel(shared(power(1.0, 2.0)), RelabelingKind::Mean, &[], &s).unwrap();
    let r = verify_prop3(Arc::new(tm), Direction::Converse, &s).unwrap();
    assert!(r.hypothesis("mean normalized").unwrap().pass);
    assert!(!r.hypothesis("A1 and A2 hold").unwrap().pass);
    assert_eq!(r.verdict, Verdict::HypothesisNotSatisfied);
    assert!(r.notes.iter().any(|n| n.contains("hypothesis (A1∧A2) not satisfied; no conclusion asserted")));
    assert!(r.conclusions.is_empty());
}

#[test]
fn prop3_requires_mean_normalization() {
    let r = verify_prop3(shared(exp_tilt()), Direction::Forward, &Settings::default()).unwrap();
    assert!(!r.hypothesis("mean normalized").unwrap().pass);
    assert_eq!(r.verdict, Verdict::HypothesisNotSatisfied);
    assert_eq!(r.verdict.exit_code(), 0);
    assert!(r.notes.iter().any(|n| n.contains("E[V|v] ≠ v")));
}

#[test]
fn gamma_mean_is_one_under_mean_normalization() {
    let s = Settings::default();
    let tol = 10.0 * s.tolerances.quadrature_rel;
    let tm = relabel(shared(power(1.0, 2.0)), RelabelingKind::Mean, &[], &s).unwrap();
    let envs: Vec<Arc<dyn Environment>> = vec![shared(logistic()), shared(uniform_additive(NoiseFamily::Laplace)), Arc::new(tm)];
    for env in envs {
        for v in env.signal_lattice(&s.grid).unwrap().into_iter().step_by(8) {
            let m = conditional_gamma_mean(env.as_ref(), v, &s).unwrap();
            assert!((m - 1.0).abs() <= tol.max(1e-8), "{v}: {m}");
        }
    }
}

#[test]
fn proposition_reports_are_deterministic() {
    let s = Settings::default();
    let run = || {
        let env = shared(exp_tilt());
        [
            serde_json::to_string(&verify_prop1(env.clone(), &s).unwrap()).unwrap(),
            serde_json::to_string(&verify_prop2(env.clone(), &s).unwrap()).unwrap(),
            serde_json::to_string(&verify_prop3(env, Direction::Converse, &s).unwrap()).unwrap(),
        ]
    };
    assert_eq!(run(), run());
}
