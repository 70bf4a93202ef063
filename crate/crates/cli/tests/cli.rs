use std::f64::consts::SQRT_2;
use std::path::Path;
use std::process::{Command, Output};

use chshd_core::ideal::ideal_maxent_correlation;
use chshd_core::json::BellFunctionalJson;
use chshd_core::{BellFunctional, Correlation, CrossDiagonalMode, QuantumStrategy};
use serde_json::Value;

fn chshd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chshd")).args(args).output().unwrap()
}

fn json_of(args: &[&str]) -> Value {
    let out = chshd(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn build_writes_a_loadable_functional() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bell.json");
    assert!(chshd(&["build", "--d", "4", "--epsilon", "0.1", "--out", path_str(&out)]).status.success());
    let v = read_json(&out);
    assert_eq!(v["manifest"]["command"], "build");
    let j: BellFunctionalJson = serde_json::from_value(v).unwrap();
    let f = BellFunctional::try_from(j).unwrap();
    assert_eq!(f, BellFunctional::build_maxent(4, 0.1, CrossDiagonalMode::Exclude).unwrap());
    let leftovers: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(leftovers.len(), 1, "no temporary files left behind");
}

#[test]
fn build_tilted_reports_alpha() {
    let v = json_of(&["build", "--tilted", "--coeffs", "0.92388,0.38268", "--epsilon", "0.1"]);
    let alpha = v["tilted_spec"]["alpha"][0].as_f64().unwrap();
    assert!((alpha - 2.0 / 3f64.sqrt()).abs() < 1e-4);
    assert_eq!(v["variant"], "tilted");
}

#[test]
fn include_mode_penalizes_the_leftover_diagonal() {
    let ex = json_of(&["build", "--d", "3", "--epsilon", "0.1"]);
    let inc = json_of(&["build", "--d", "3", "--epsilon", "0.1", "--cross-diagonal", "include"]);
    let e = ex["coeff"][0][0][2][2].as_f64().unwrap();
    let i = inc["coeff"][0][0][2][2].as_f64().unwrap();
    assert!((e - SQRT_2 / 2.0).abs() < 1e-15);
    assert!((i - (e - 0.1)).abs() < 1e-15);
    assert_eq!(inc["mode"], "include");
}

#[test]
fn classical_examples() {
    assert_eq!(json_of(&["classical", "--d", "2", "--epsilon", "0.1"])["value"].as_f64(), Some(2.0));
    assert_eq!(json_of(&["classical", "--d", "6", "--epsilon", "0.1"])["value"].as_f64(), Some(4.0));
    let out = chshd(&["classical", "--sweep-d", "2,4", "--sweep-epsilon", "0.1,0.2", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[0].starts_with("d,epsilon,mode,variant,value"));
    assert!(lines[1].starts_with("2,0.1,exclude,maxent,2.0"));
}

#[test]
fn classical_refuses_above_cap() {
    let out = chshd(&["classical", "--d", "5", "--max-d", "4"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("exceeds the cap"));
}

#[test]
fn ideal_examples() {
    let v = json_of(&["ideal", "--d", "5"]);
    assert!((v["bell_value"].as_f64().unwrap() - 4.0 * SQRT_2).abs() < 1e-9);
    let v = json_of(&["ideal", "--d", "2"]);
    assert!((v["bell_value"].as_f64().unwrap() - 2.0 * SQRT_2).abs() < 1e-9);
    let v = json_of(&["ideal", "--tilted", "--coeffs", "0.5,0.5,0.5,0.5"]);
    assert!((v["bell_value"].as_f64().unwrap() - 2.0).abs() < 1e-9);
}

#[test]
fn ideal_artifact_round_trips_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ideal.json");
    assert!(chshd(&["ideal", "--d", "4", "--out", path_str(&out)]).status.success());
    let p: Correlation = serde_json::from_value(read_json(&out)).unwrap();
    assert_eq!(p, ideal_maxent_correlation(4).unwrap());
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ideal = dir.path().join("ideal.json");
    assert!(chshd(&["ideal", "--d", "4", "--out", path_str(&ideal)]).status.success());
    let out = chshd(&["verify", "--d", "4", "--correlation", path_str(&ideal)]);
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["verdict"], "self-tested");
    assert_eq!(report["checks"]["weights"]["passed"], true);

    let uniform = dir.path().join("uniform.json");
    std::fs::write(&uniform, serde_json::to_string(&Correlation::uniform(4)).unwrap()).unwrap();
    let out = chshd(&["verify", "--d", "4", "--correlation", path_str(&uniform)]);
    assert_eq!(out.status.code(), Some(1));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["verdict"], "fail");
}

#[test]
fn eval_uses_saved_functional() {
    let dir = tempfile::tempdir().unwrap();
    let bell = dir.path().join("bell.json");
    let ideal = dir.path().join("ideal.json");
    assert!(chshd(&["build", "--d", "4", "--out", path_str(&bell)]).status.success());
    assert!(chshd(&["ideal", "--d", "4", "--out", path_str(&ideal)]).status.success());
    let out = chshd(&["eval", "--bell", path_str(&bell), "--correlation", path_str(&ideal)]);
    assert!(out.status.success());
    let value: f64 = String::from_utf8(out.stdout).unwrap().trim().parse().unwrap();
    assert!((value - 4.0 * SQRT_2).abs() < 1e-9);
}

#[test]
fn seesaw_is_deterministic_given_seed() {
    let args = ["seesaw", "--d", "3", "--restarts", "20", "--seed", "7"];
    let a = json_of(&args);
    let b = json_of(&args);
    assert_eq!(a["result"]["best_value"], b["result"]["best_value"]);
    assert_eq!(a["result"]["trajectory"], b["result"]["trajectory"]);
    assert_eq!(a["manifest"]["seed"], 7);
    let s: QuantumStrategy = serde_json::from_value(a["result"]["best_strategy"].clone()).unwrap();
    assert!(s.max_defect() < 1e-9);
}

#[test]
fn seesaw_without_seed_records_one() {
    let a = json_of(&["seesaw", "--d", "2", "--restarts", "2", "--iters", "5"]);
    let seed = a["manifest"]["seed"].as_u64().unwrap().to_string();
    let b = json_of(&["seesaw", "--d", "2", "--restarts", "2", "--iters", "5", "--seed", &seed]);
    assert_eq!(a["result"]["trajectory"], b["result"]["trajectory"]);
}

#[test]
fn seesaw_csv_has_one_row_per_sweep() {
    let out = chshd(&["seesaw", "--d", "2", "--restarts", "2", "--seed", "1", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("restart,sweep,value"));
    assert!(text.lines().count() > 2);
}

#[test]
fn bad_flags_are_rejected() {
    assert_eq!(chshd(&["build", "--d", "4", "--epsilon", "0"]).status.code(), Some(2));
    assert_eq!(chshd(&["build", "--tilted", "--coeffs", "0.5,0.5"]).status.code(), Some(2));
    assert_eq!(chshd(&["build", "--d", "4", "--format", "csv"]).status.code(), Some(2));
    assert_eq!(chshd(&["build", "--d", "4", "--cross-diagonal", "maybe"]).status.code(), Some(2));
}
