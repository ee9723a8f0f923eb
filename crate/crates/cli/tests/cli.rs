use std::process::{Command, Output};

use serde_json::Value;

fn qorrel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qorrel"))
        .args(args)
        .env("QORREL_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

fn level(report: &Value, k: usize) -> f64 {
    report["spectrum"][k.to_string()].as_f64().unwrap()
}

const LN3: f64 = 1.0986122886681098;

#[test]
fn ms_analytic_spectrum() {
    let out = qorrel(&["spectrum", "--family", "ms", "--n", "4", "--alpha", "0.5", "--method", "analytic"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert!((level(&r, 3) - LN3).abs() < 1e-12);
    assert_eq!(level(&r, 4), 0.0);
    assert_eq!(r["method"], "analytic");
}

#[test]
fn product_state_has_no_correlations() {
    let out = qorrel(&["spectrum", "--family", "ghz1", "--n", "3", "--theta", "0", "--phi", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(level(&r, 2), 0.0);
    assert_eq!(level(&r, 3), 0.0);
}

#[test]
fn balanced_ghz_through_the_oracle() {
    let theta = (1.0f64 / 3f64.sqrt()).acos().to_string();
    let out = qorrel(&[
        "spectrum", "--family", "ghz1", "--n", "3", "--theta", &theta, "--phi",
        "0.7853981633974483", "--method", "oracle",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert!((level(&r, 2) - 2.0 * LN3).abs() < 1e-2);
    assert!((level(&r, 3) - LN3).abs() < 1e-2);
}

#[test]
fn verify_theorem1_passes() {
    let out = qorrel(&["verify", "--theorem", "1", "--n", "3", "--grid", "3", "--tol", "1e-2"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["pass"], true);
}

#[test]
fn limits_sweep_decreases() {
    let out = qorrel(&["limits", "--family", "ghz1", "--n", "3", "--theta", "0.5", "--phi", "0.3"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    let rows = r["details"]["rows"].as_array().expect("rows");
    let d: Vec<f64> = rows.iter().map(|x| x["distance"].as_f64().unwrap()).collect();
    assert_eq!(d.len(), 4);
    assert!(d.windows(2).all(|w| w[1] <= w[0]));
    assert!(d[3] <= 1e-9);
}

#[test]
fn ms_exp_fidelity_approaches_one() {
    let out = qorrel(&["limits", "--family", "ms-exp", "--n", "3", "--alpha", "0.9553166181245093"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    let rows = r["details"]["rows"].as_array().unwrap();
    let f: Vec<f64> = rows.iter().map(|x| x["fidelity"].as_f64().unwrap()).collect();
    assert!(f.windows(2).all(|w| w[1] >= w[0]));
    assert!(*f.last().unwrap() >= 1.0 - 1e-8);
}

#[test]
fn witness_examples() {
    let out = qorrel(&["witness", "--family", "ghz1-pure", "--n", "3", "--samples", "100", "--seed", "42"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["pass"], true);

    let out = qorrel(&["witness", "--family", "ms", "--n", "4"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["pass"], true);

    let out = qorrel(&["witness", "--family", "ghz2-pure", "--n", "4", "--m", "2"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn bad_input_exits_2_with_error_json() {
    let out = qorrel(&["spectrum", "--family", "ms", "--n", "4", "--alpha", "2.0"]);
    assert_eq!(out.status.code(), Some(2));
    let r = json(&out);
    assert_eq!(r["error"]["exit_code"], 2);
    assert_eq!(r["error"]["kind"], "input");
    assert!(r.get("spectrum").is_none());

    // oracle size limit and missing split
    let out = qorrel(&["spectrum", "--family", "ghz1", "--n", "5", "--method", "oracle"]);
    assert_eq!(out.status.code(), Some(2));
    let out = qorrel(&["spectrum", "--family", "ghz2", "--n", "4"]);
    assert_eq!(out.status.code(), Some(2));
    // argument errors from the parser follow the same contract
    let out = qorrel(&["witness", "--family", "nope", "--n", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["error"]["kind"], "input");
}

#[test]
fn numerical_failure_exits_3() {
    let out = qorrel(&["oracle-dump", "--family", "ghz1", "--n", "3", "--epsilon", "1e-300"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json(&out)["error"]["kind"], "numerical");
}

#[test]
fn reports_are_deterministic_without_timings() {
    let args = ["witness", "--family", "ghz1-pure", "--n", "3", "--samples", "20", "--seed", "7", "--no-timings"];
    let a = qorrel(&args);
    let b = qorrel(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert!(json(&a).get("timings").is_none());
}

#[test]
fn csv_has_one_row_per_level() {
    let out = qorrel(&["spectrum", "--family", "ms", "--n", "5", "--alpha", "0.4", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("label,level,value,total"));
    assert_eq!(lines.count(), 4);
}

#[test]
fn coefficient_file_and_out_path() {
    let dir = tempfile::tempdir().unwrap();
    let coeff = dir.path().join("c.json");
    // diagonal (1/4, 1/2, 1/4) with a partial 0-2 coherence
    std::fs::write(
        &coeff,
        r#"{"c": [[[0.25, 0.0], [0.0, 0.0], [0.1, 0.05]],
                  [[0.0, 0.0], [0.5, 0.0], [0.0, 0.0]],
                  [[0.1, -0.05], [0.0, 0.0], [0.25, 0.0]]]}"#,
    )
    .unwrap();
    let report = dir.path().join("out.json");
    let out = qorrel(&[
        "spectrum", "--family", "ghz1", "--n", "3", "--coeff-file",
        coeff.to_str().unwrap(), "--out", report.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    // C(2) = 2 H3 with H3 the entropy of the diagonal
    let h3 = -(0.25f64 * 0.25f64.ln() * 2.0 + 0.5 * 0.5f64.ln());
    assert!((level(&r, 2) - 2.0 * h3).abs() < 1e-12);
    assert!(level(&r, 3) > 0.0 && level(&r, 3) < h3);

    let out = qorrel(&["spectrum", "--family", "ghz1", "--n", "3", "--coeff-file", "/nonexistent.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn floats_carry_seventeen_significant_digits() {
    let out = qorrel(&["spectrum", "--family", "ms", "--n", "4", "--alpha", "0.5", "--no-timings"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("1.0986122886681098e0"));
}
