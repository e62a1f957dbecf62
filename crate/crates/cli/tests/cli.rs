use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn instance(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../instances").join(name)
}

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chebcent"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("CHEBY_PINNED")
        .output()
        .unwrap()
}

fn report(out: &Path, task: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join(format!("{task}.json"))).unwrap()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn solve_reports_unit_radius_for_symmetric_pair() {
    let out = tempfile::tempdir().unwrap();
    let inst = instance("max2-pair.json");
    let o = run(&["solve", "--instance", inst.to_str().unwrap()], out.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(out.path(), "solve");
    assert_eq!(r["path"], "exact");
    assert_eq!(r["verified"], true);
    assert!((r["results"]["radius"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(r["tol"].as_f64().unwrap(), 1e-9);
    // Under the max-norm the center set is the segment {0} × [−1, 1].
    assert_eq!(r["results"]["centers"]["kind"], "polytope");
    assert_eq!(r["results"]["centers"]["points"].as_array().unwrap().len(), 2);
}

#[test]
fn euclidean_pair_has_a_single_center() {
    let out = tempfile::tempdir().unwrap();
    let inst = instance("l2-pair.json");
    let o = run(&["solve", "--instance", inst.to_str().unwrap()], out.path());
    assert_eq!(o.status.code(), Some(0));
    let r = report(out.path(), "solve");
    assert_eq!(r["path"], "iterative");
    assert!((r["results"]["radius"].as_f64().unwrap() - 1.0).abs() < 1e-8);
    let c = &r["results"]["centers"]["points"][0];
    assert!(c[0].as_f64().unwrap().abs() < 1e-6 && c[1].as_f64().unwrap().abs() < 1e-6);
}

#[test]
fn verify_p1_writes_the_curve() {
    let out = tempfile::tempdir().unwrap();
    let inst = instance("max2-pair.json");
    let o = run(
        &["verify-p1", "--instance", inst.to_str().unwrap(), "--eps", "0.1", "--deltas", "geometric:20"],
        out.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(out.path().join("p1_curve.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("delta,s_value"));
    assert_eq!(lines.count(), 21);
    let r = report(out.path(), "verify-p1");
    assert_eq!(r["results"]["monotone"], true);
    assert_eq!(r["results"]["delta_estimate"]["certified"], true);
}

#[test]
fn lemma34_uses_the_explicit_delta() {
    let out = tempfile::tempdir().unwrap();
    let inst = instance("max2-pair.json");
    let o = run(
        &["lemma34", "--instance", inst.to_str().unwrap(), "--alpha", "2", "--eps", "0.1"],
        out.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let r = report(out.path(), "lemma34");
    assert!((r["results"]["r_f"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((r["results"]["delta"].as_f64().unwrap() - 0.005).abs() < 1e-15);
    assert_eq!(r["results"]["verified"], true);
}

#[test]
fn continuity_csv_has_fixed_columns() {
    let out = tempfile::tempdir().unwrap();
    let inst = instance("max2-pair.json");
    let o = run(
        &["probe-continuity", "--instance", inst.to_str().unwrap(), "--deltas", "0.01,0.1", "--trials", "3"],
        out.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(out.path().join("continuity.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("delta,dH_F,dH_cent,lower_dev,upper_dev,seed"));
    // eps in params adds the δ*/2 row group.
    assert_eq!(lines.count(), 9);
}

#[test]
fn flags_override_params() {
    let out = tempfile::tempdir().unwrap();
    let inst = instance("max2-pair.json");
    run(&["lemma34", "--instance", inst.to_str().unwrap(), "--alpha", "3", "--trials", "5"], out.path());
    let r = report(out.path(), "lemma34");
    assert_eq!(r["results"]["alpha"].as_f64(), Some(3.0));
    assert_eq!(r["results"]["trials"].as_u64(), Some(5));
}

#[test]
fn schema_errors_exit_2_with_a_machine_readable_list() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(
        dir.path(),
        "bad.json",
        r#"{"version": 1, "norm": {"kind": "hex", "dim": 2}, "points": [[1, 0]]}"#,
    );
    let o = run(&["solve", "--instance", bad.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "schema");
    assert_eq!(err["errors"][0]["path"], "norm");
    assert!(err["errors"][0]["line"].is_u64());
    assert!(!dir.path().join("solve.json").exists());
}

#[test]
fn missing_parameters_exit_2() {
    let out = tempfile::tempdir().unwrap();
    let inst = instance("l2-pair.json");
    let o = run(&["lemma34", "--instance", inst.to_str().unwrap()], out.path());
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["solve"], out.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn oversized_oracle_request_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(
        dir.path(),
        "d4.json",
        r#"{"version": 1, "norm": {"kind": "max", "dim": 4}, "points": [[1, 0, 0, 0]]}"#,
    );
    let o = run(&["oracle", "--instance", inst.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(3));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "capability");
}

#[test]
fn falsified_claim_exits_4_with_witness() {
    let dir = tempfile::tempdir().unwrap();
    let pinned = write(
        dir.path(),
        "pinned.json",
        r#"{"version": 1, "entries": [{"id": "wrong", "quantity": "radius",
            "norm": {"kind": "max", "dim": 2}, "constraint": {"kind": "whole_space"},
            "points": [[1, 0], [-1, 0]], "h": 0.01, "c_n": 1, "value": 1.5}]}"#,
    );
    let inst = instance("max2-pair.json");
    let o = Command::new(env!("CARGO_BIN_EXE_chebcent"))
        .args(["oracle", "--instance", inst.to_str().unwrap(), "--out"])
        .arg(dir.path())
        .env("CHEBY_PINNED", &pinned)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(4));
    let r = report(dir.path(), "oracle");
    assert_eq!(r["verified"], false);
    assert_eq!(r["results"]["radius"]["source"], "pinned");
    assert_eq!(r["witness"]["kind"], "radius");
}

#[test]
fn reports_round_trip_and_leave_no_temp_files() {
    let out = tempfile::tempdir().unwrap();
    let inst = instance("sum-boxes.json");
    let o = run(&["decompose", "--instance", inst.to_str().unwrap()], out.path());
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(out.path().join("decompose.json")).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(chebcent::io::to_json_pretty(&v), text);
    let mut names: Vec<_> = std::fs::read_dir(out.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["decompose.json", "decompose.timing.txt"]);
}

#[test]
fn report_header_fields_come_first_in_fixed_order() {
    let out = tempfile::tempdir().unwrap();
    let inst = instance("scaling.json");
    run(&["scale-check", "--instance", inst.to_str().unwrap(), "--lambda", "3"], out.path());
    let text = std::fs::read_to_string(out.path().join("scale-check.json")).unwrap();
    let keys: Vec<&str> = text
        .lines()
        .filter(|l| l.starts_with("  \""))
        .map(|l| l.trim().split('"').nth(1).unwrap())
        .collect();
    assert_eq!(
        keys,
        ["format_version", "task", "instance", "instance_digest", "seed", "tol", "path", "verified", "results", "witness"]
    );
}

#[test]
fn amir_trace_is_reported_for_eps0() {
    let out = tempfile::tempdir().unwrap();
    let inst = instance("amir-l2.json");
    let o = run(&["solve", "--instance", inst.to_str().unwrap()], out.path());
    assert_eq!(o.status.code(), Some(0));
    let r = report(out.path(), "solve");
    let steps = r["results"]["trace"]["steps"].as_array().unwrap();
    assert!(!steps.is_empty());
    assert!(r["results"]["radius_gap"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn msummand_instances_agree_with_the_full_space() {
    let out = tempfile::tempdir().unwrap();
    let inst = instance("msummand.json");
    let o = run(&["decompose", "--instance", inst.to_str().unwrap()], out.path());
    assert_eq!(o.status.code(), Some(0));
    let r = report(out.path(), "decompose");
    assert_eq!(r["results"]["case"], "inherited");
    assert!(r["results"]["curve_gap"].as_f64().unwrap() <= 1e-7);
}
