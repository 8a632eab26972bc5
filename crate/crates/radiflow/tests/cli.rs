use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn radiflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_radiflow")).args(args).output().expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn modes_then_report_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let out = radiflow(&["modes", "--out", path(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("modes.csv")).unwrap();
    assert!(csv.starts_with("rho,re_lambda_1,"));
    assert_eq!(csv.lines().count(), 42);

    let first = radiflow(&["report", path(dir.path())]);
    assert!(first.status.success());
    let summary = dir.path().join("report").join("summary.txt");
    let a = fs::read(&summary).unwrap();
    let curves = fs::read(dir.path().join("report").join("eigen_curves.csv")).unwrap();
    assert!(radiflow(&["report", path(dir.path())]).status.success());
    assert_eq!(a, fs::read(&summary).unwrap());
    assert_eq!(curves, fs::read(dir.path().join("report").join("eigen_curves.csv")).unwrap());
}

#[test]
fn report_without_artifacts_fails_with_json_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = radiflow(&["report", path(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "MissingArtifacts");
}

#[test]
fn bad_config_exits_one_with_key_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "params.eps = 0.1\nsolver.dt = -1\n").unwrap();
    let out = radiflow(&["simulate", "--config", path(&cfg), "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "SchemaError");
    assert_eq!(err["key"], "solver.dt");
    assert_eq!(err["line"], 2);
}

#[test]
fn unordered_ladder_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = radiflow(&["converge", "--eps-ladder", "0.01,0.1", "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn toy_writes_one_record_per_draw() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "experiment.draws = 5\n").unwrap();
    let out = radiflow(&["toy", "--config", path(&cfg), "--out", path(dir.path()), "--seed", "3"]);
    assert!(out.status.success());
    let text = fs::read_to_string(dir.path().join("toy.jsonl")).unwrap();
    assert_eq!(text.lines().count(), 5);
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["commutator_residual"].as_f64().unwrap() < 1e-12);
        if let Some(r) = v["max_ratio_ODE5"].as_f64() {
            assert!(r <= 1.0 + 1e-6);
        }
    }
}
