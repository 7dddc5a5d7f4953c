mod common;

use std::fs;

use common::model_path;
use serde_json::Value;
use seqscreen::cli::run;

struct Output {
    code: i32,
    stdout: String,
    stderr: String,
}

fn seqscreen(args: &[&str]) -> Output {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut full = vec!["seqscreen"];
    full.extend_from_slice(args);
    let code = run(full, &mut out, &mut err);
    Output {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn model(name: &str) -> String {
    model_path(name).to_string_lossy().into_owned()
}

fn csv_rows(text: &str) -> Vec<[f64; 3]> {
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("v,V,value"));
    lines
        .map(|l| {
            let f: Vec<f64> = l.split(',').map(|t| t.parse().unwrap()).collect();
            [f[0], f[1], f[2]]
        })
        .collect()
}

#[test]
fn check_logistic_passes() {
    let o = seqscreen(&["check", &model("additive_logistic.toml")]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let report: Value = serde_json::from_str(&o.stdout).unwrap();
    for c in report["checks"].as_array().unwrap() {
        assert_eq!(c["pass"], true);
    }
    assert_eq!(report["checks"].as_array().unwrap().len(), 5);
    assert_eq!(report["settings"]["grid"]["v_points"], 129);
    assert_eq!(report["settings"]["tolerances"]["monotonicity_slack"], 1e-8);
}

#[test]
fn check_power_fails_naming_a1() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = seqscreen(&["check", &model("power.toml"), "--out", out.to_str().unwrap()]);
    assert_eq!(o.code, 1);
    assert!(o.stdout.is_empty());
    assert!(o.stderr.contains("A1    FAIL"));
    let report: Value = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
    let a1 = report["checks"].as_array().unwrap().iter().find(|c| c["assumption"] == "A1").unwrap();
    assert_eq!(a1["pass"], false);
    assert!(a1["witnesses"][0]["to"]["V"].as_f64().unwrap() < 0.37);
}

#[test]
fn unknown_key_exits_two_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    let text = fs::read_to_string(model_path("additive_logistic.toml")).unwrap().replace("noise.family", "nois.family");
    fs::write(&path, text).unwrap();
    let o = seqscreen(&["check", path.to_str().unwrap()]);
    assert_eq!(o.code, 2);
    assert!(o.stderr.contains("nois.family") && o.stderr.contains("line 8"), "{}", o.stderr);
}

#[test]
fn bad_arguments_exit_two() {
    assert_eq!(seqscreen(&["grid", &model("power.toml"), "--what", "rho"]).code, 2);
    assert_eq!(seqscreen(&["verify", &model("power.toml"), "--prop", "4"]).code, 2);
    assert_eq!(seqscreen(&["check", &model("power.toml"), "--grid", "3"]).code, 2);
    assert_eq!(seqscreen(&["transform", &model("power.toml"), "--kind", "spline"]).code, 2);
    assert_eq!(seqscreen(&[]).code, 2);
    assert_eq!(seqscreen(&["--help"]).code, 0);
}

#[test]
fn overrides_land_in_the_report() {
    let o = seqscreen(&["check", &model("exp_tilt.toml"), "--grid", "9x5", "--slack", "0.5"]);
    let report: Value = serde_json::from_str(&o.stdout).unwrap();
    assert_eq!(report["settings"]["grid"]["v_points"], 9);
    assert_eq!(report["settings"]["grid"]["V_points"], 5);
    assert_eq!(report["settings"]["tolerances"]["monotonicity_slack"], 0.5);
    assert_eq!(o.code, 0, "a slack of 0.5 absorbs every violation");
}

#[test]
fn gamma_grid_of_additive_model_is_one() {
    let o = seqscreen(&["grid", &model("additive_normal.toml"), "--what", "gamma", "--grid", "17x17"]);
    assert_eq!(o.code, 0);
    let rows = csv_rows(&o.stdout);
    assert_eq!(rows.len(), 17 * 17);
    assert!(rows.iter().all(|r| r[2] == 1.0));
}

#[test]
fn psi_grid_matches_the_additive_oracle() {
    let o = seqscreen(&["grid", &model("additive_logistic.toml"), "--what", "psi", "--grid", "9x9"]);
    for [v, x, psi] in csv_rows(&o.stdout) {
        assert!((psi - (x - (1.0 - v))).abs() < 1e-12, "{v} {x} {psi}");
    }
    for field in o.stdout.lines().nth(1).unwrap().split(',') {
        let mantissa = field.split('e').next().unwrap();
        assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17, "{field}");
    }
}

#[test]
fn two_by_two_grid_has_four_rows() {
    let o = seqscreen(&["grid", &model("power.toml"), "--what", "H", "--grid", "2x2"]);
    assert_eq!(csv_rows(&o.stdout).len(), 4);
}

#[test]
fn transform_output_round_trips_through_check() {
    let dir = tempfile::tempdir().unwrap();
    let derived = dir.path().join("derived.toml");
    let o = seqscreen(&["transform", &model("exp_tilt.toml"), "--kind", "integrated-hazard", "--out", derived.to_str().unwrap()]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let text = fs::read_to_string(&derived).unwrap();
    assert!(text.contains("[transform]") && text.contains("kind = \"integrated_hazard\""));
    let o = seqscreen(&["check", derived.to_str().unwrap()]);
    let report: Value = serde_json::from_str(&o.stdout).unwrap();
    let (lo, hi) = (report["hazard"]["min"].as_f64().unwrap(), report["hazard"]["max"].as_f64().unwrap());
    assert!((lo - 1.0).abs() < 1e-6 && (hi - 1.0).abs() < 1e-6, "{lo} {hi}");
    assert_eq!(seqscreen(&["transform", derived.to_str().unwrap(), "--kind", "affine"]).code, 2);
    let o = seqscreen(&["transform", &model("power.toml"), "--kind", "affine", "--params", "2,-1"]);
    assert!(o.stdout.contains("params = [2.0, -1.0]"), "{}", o.stdout);
}

#[test]
fn verify_exit_codes_follow_the_verdict() {
    let o = seqscreen(&["verify", &model("power.toml"), "--prop", "2"]);
    assert_eq!(o.code, 0);
    let report: Value = serde_json::from_str(&o.stdout).unwrap();
    assert_eq!(report["verdict"], "consistent");

    let o = seqscreen(&["verify", &model("exp_tilt.toml"), "--prop", "3"]);
    assert_eq!(o.code, 0);
    let report: Value = serde_json::from_str(&o.stdout).unwrap();
    assert_eq!(report["verdict"], "hypothesis not satisfied");
    assert!(report["notes"].to_string().contains("hypothesis fail: E[V|v] ≠ v"));

    let o = seqscreen(&["verify", &model("additive_logistic.toml"), "--prop", "1"]);
    assert_eq!(o.code, 1);
    assert!(o.stderr.contains("discrepancy flagged"));

    let o = seqscreen(&["verify", &model("additive_laplace.toml"), "--prop", "3", "--direction", "converse"]);
    assert_eq!(o.code, 0);
    assert!(o.stdout.contains("\"verdict\": \"consistent\""));
}
