use std::process::{Command, Output};

use serde_json::Value;

fn ordconv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ordconv"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn schema() -> jsonschema::JSONSchema {
    let text = include_str!("../schema/report.schema.json");
    let schema: Value = serde_json::from_str(text).expect("schema parses");
    jsonschema::JSONSchema::compile(&schema).expect("schema compiles")
}

/// Runs with `--json`, validates against the shipped schema, and returns
/// the exit code and parsed report.
fn json_report(args: &[&str]) -> (i32, Value) {
    let mut full = vec!["--json"];
    full.extend_from_slice(args);
    let out = ordconv(&full);
    let report: Value = serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout)));
    let compiled = schema();
    if let Err(errors) = compiled.validate(&report) {
        let msgs: Vec<String> = errors.map(|e| format!("{} at {}", e, e.instance_path)).collect();
        panic!("report for {args:?} violates schema: {msgs:?}\n{report:#}");
    }
    (out.status.code().expect("exit code"), report)
}

const EX5II: &str = "0..1:1; 1..inf:x^(-2/3)";

#[test]
fn classify_multiplier_exits_zero() {
    let (code, r) = json_report(&["classify", "--phi", EX5II, "--r", "3", "--p", "3/2"]);
    assert_eq!(code, 0);
    assert_eq!(r["verdict"], "Multiplier");
    assert_eq!(r["regime"], "r>p");
    assert!(r.get("witness").is_none());
    let upper = r["bounds"]["upper"].as_f64().unwrap();
    let lower = r["bounds"]["lower"].as_f64().unwrap();
    assert!(lower <= upper);
}

#[test]
fn classify_constant_gives_witness() {
    let (code, r) = json_report(&["classify", "--phi", "0..inf:1", "--r", "3", "--p", "3/2"]);
    assert_eq!(code, 0);
    assert_eq!(r["verdict"], "NotMultiplier");
    assert_eq!(r["witness"]["alpha"], "1/2");
    assert_eq!(r["witness"]["failure"]["exponent"], "-3/4");
    assert_eq!(r["witness"]["failure"]["endpoint"], "inf");
}

#[test]
fn classify_undetermined_exits_two() {
    // Boundary case: phi = x^(-1/v) on the tail is not in L_v and no f_alpha
    // with alpha > 1/r breaks it.
    let (code, r) = json_report(&[
        "classify",
        "--phi",
        "0..1: 1; 1..inf: x^(-1/3)",
        "--r",
        "3",
        "--p",
        "3/2",
    ]);
    assert_eq!(r["verdict"], "Undetermined");
    assert_eq!(code, 2);
}

#[test]
fn norm_reports_divergence_certificate() {
    let (code, r) = json_report(&["norm", "--fn", "0..1:x; 1..inf:x^(-1/2)", "--p", "3/2"]);
    assert_eq!(code, 0);
    assert_eq!(r["value"], "inf");
    assert_eq!(r["divergence"]["endpoint"], "inf");
    assert_eq!(r["divergence"]["exponent"], "-3/4");
}

#[test]
fn ap_norm_of_tent() {
    let (code, r) = json_report(&["norm", "--ap", "--fn", "0..1:1; 1..2:-1; 2..inf:0", "--p", "3/2"]);
    assert_eq!(code, 0);
    // ||f||_1 = 2, f^ = x on (0,1) and 2 - x on (1,2): ||f^||_{3/2}^{3/2} = 4/5.
    let want = 2.0 + 0.8f64.powf(2.0 / 3.0);
    assert!((r["value"].as_f64().unwrap() - want).abs() < 1e-12);
}

#[test]
fn eval_convolve_transform() {
    let (_, r) = json_report(&["eval", "--fn", EX5II, "--at", "8"]);
    assert_eq!(r["exact"], "1/4");
    let (_, r) = json_report(&["convolve", "--f", "0..1:1; 1..inf:0", "--g", "0..2:1; 2..inf:0"]);
    assert_eq!(r["result"]["dsl"], "0..1: 2*x; 1..2: 1; 2..inf: 0");
    let (_, r) = json_report(&["transform", "--fn", "0..1:1; 1..inf:x^(-2)"]);
    assert_eq!(r["result"]["dsl"], "0..1: x; 1..inf: -x^(-1) + 2");
}

#[test]
fn witness_command() {
    let (code, r) = json_report(&["witness", "--phi", "0..1:1; 1..inf:x^(1/2)", "--r", "3/2", "--p", "3"]);
    assert_eq!(code, 0);
    assert_eq!(r["witness"]["alpha"], "5/6");
    let (_, r) = json_report(&["witness", "--phi", EX5II, "--r", "3", "--p", "3/2"]);
    assert!(r["witness"].is_null());
}

#[test]
fn scenarios_validate_and_set_exit_code() {
    let (code, r) = json_report(&[
        "scenario",
        "--id",
        "thm7-tent",
        "--params",
        "alpha=1,beta=2,gamma=3,r=2",
    ]);
    assert_eq!(code, 0);
    assert_eq!(r["passed"], true);
    let (code, r) = json_report(&["scenario", "--id", "ex8"]);
    assert_eq!(r["passed"], false);
    assert_eq!(code, 1);
    let failed: Vec<&str> = r["assertions"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|a| a["passed"] == false)
        .map(|a| a["name"].as_str().unwrap())
        .collect();
    assert_eq!(failed, ["all necessary conditions hold"]);
}

#[test]
fn scenario_runs_are_byte_identical() {
    for id in ["prop2", "homomorphism", "ex5ii"] {
        let a = ordconv(&["--json", "--seed", "99", "scenario", "--id", id]);
        let b = ordconv(&["--json", "--seed", "99", "scenario", "--id", id]);
        assert!(!a.stdout.is_empty());
        assert_eq!(a.stdout, b.stdout, "{id}");
    }
    let a = ordconv(&[
        "--json",
        "--threads",
        "4",
        "classify",
        "--phi",
        EX5II,
        "--r",
        "3",
        "--p",
        "3/2",
    ]);
    let b = ordconv(&[
        "--json",
        "--threads",
        "1",
        "classify",
        "--phi",
        EX5II,
        "--r",
        "3",
        "--p",
        "3/2",
    ]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn errors_exit_one_with_position() {
    let (code, r) = json_report(&["norm", "--fn", "0..1: 1; 2..inf: 1", "--p", "2"]);
    assert_eq!(code, 1);
    let msg = r["error"].as_str().unwrap();
    assert!(msg.contains("gap"), "{msg}");
    let (code, r) = json_report(&["eval", "--fn", "0..1: x^; 1..inf: 0", "--at", "1"]);
    assert_eq!(code, 1);
    assert!(r["error"].as_str().unwrap().contains("column"));
    assert_eq!(ordconv(&["norm", "--bogus"]).status.code(), Some(1));
    let (code, _) = json_report(&["scenario", "--id", "nope"]);
    assert_eq!(code, 1);
}

#[test]
fn text_output_is_readable() {
    let out = ordconv(&["classify", "--phi", "0..inf:1", "--r", "3", "--p", "3/2"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("verdict: NotMultiplier"));
    assert!(text.contains("witness alpha = 1/2"));
}
