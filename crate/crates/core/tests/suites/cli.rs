use std::path::Path;
use std::process::{Command, Output};

use posnet::scenario::write_scenario;
use posnet::transport::Velocity;
use posnet::{Mode, Scenario};

fn posnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_posnet")).args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn verdict(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("verdict.json")).unwrap()).unwrap()
}

#[test]
fn analyze_cycle_writes_verdict_and_generators() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cycle.json");
    write_scenario(&Scenario::cycle(4, 2.0), &path).unwrap();
    let out = posnet(&["analyze", "--scenario", s(&path), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(verdict(dir.path())["decision"], "controllable");
    let csv = std::fs::read_to_string(dir.path().join("generators.csv")).unwrap();
    assert!(csv.lines().next().unwrap().starts_with("generator"));
    assert_eq!(csv.lines().count(), 1 + 4 * 4);
}

#[test]
fn analyze_mode_override_on_heat_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("heat.json");
    let mut sc = Scenario::heat_path(1.0, Mode::Positive);
    sc.discretization.points = 41;
    write_scenario(&sc, &path).unwrap();
    let out = posnet(&["analyze", "--scenario", s(&path), "--out", s(dir.path()), "--mode", "control-constrained"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = verdict(dir.path());
    assert_eq!(v["decision"], "not_controllable");
    assert_eq!(v["mode"], "control_constrained");
}

#[test]
fn invalid_scenario_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    let mut sc = Scenario::cycle(3, 1.0);
    sc.params.velocity = Some(Velocity::Single(-2.0));
    std::fs::write(&path, serde_json::to_string(&sc).unwrap()).unwrap();
    let out = posnet(&["analyze", "--scenario", s(&path), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("velocity"));
    let missing = posnet(&["analyze", "--scenario", "/nonexistent/x.json"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn simulate_reports_positive_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cycle.json");
    let mut sc = Scenario::cycle(3, 1.0);
    sc.discretization.points = 21;
    write_scenario(&sc, &path).unwrap();
    let control = dir.path().join("u.csv");
    std::fs::write(&control, "t,u_1\n0,1\n0.5,0\n1.0,2\n").unwrap();
    let traj = dir.path().join("traj.csv");
    let out = posnet(&["simulate", "--scenario", s(&path), "--control", s(&control), "--t-final", "2", "--out", s(&traj)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["positivity_violations"], 0);
    assert!(summary["steps"].as_u64().unwrap() >= 40);
    assert!(std::fs::metadata(&traj).unwrap().len() > 0);
}

#[test]
fn szasz_check_and_selftest_pass() {
    let out = posnet(&["szasz", "--check"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("check passed"));
    let out = posnet(&["selftest"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}
