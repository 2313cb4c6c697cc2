use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const OPEN: &str = r#"{"alpha": 1, "xi": [1, 0], "A": {"lambda": 1, "mu": 2}, "eta1": [0, 1], "omega": [-3, 3]}"#;
const ROTATION: &str = r#"{"alpha": 1, "xi": [1, 0], "A": {"lambda": 0, "mu": 1}, "eta1": [1, 0], "omega": [-2, 2]}"#;
const DEGENERATE: &str = r#"{"alpha": 1, "xi": [1, 0], "A": [[0, 0], [0, 0]], "eta1": [0, 1], "omega": [-1, 1]}"#;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_se2lcs"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn classify_cases() {
    let dir = TempDir::new().unwrap();
    let deg = write(&dir, "deg.json", DEGENERATE);
    let rot = write(&dir, "rot.json", ROTATION);
    let out = run(&["classify", s(&deg)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["case"], "DegenerateDetZero");
    let out = run(&["classify", s(&rot)]);
    assert_eq!(json(&out)["case"], "ControllableTraceZero");
}

#[test]
fn classify_rejects_bad_specs() {
    let dir = TempDir::new().unwrap();
    let bad = write(
        &dir,
        "bad.json",
        r#"{"alpha": 1, "xi": [1, 0], "A": {"lambda": 1, "mu": 0}, "eta1": [0, 1], "omega": [1, -1]}"#,
    );
    let out = run(&["classify", s(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());

    let broken = write(&dir, "broken.json", "{\n  \"alpha\": 1,\n  \"xi\": [1,\n}");
    let out = run(&["classify", s(&broken)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"));

    let out = run(&["classify", "/nonexistent/spec.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn classify_writes_out_file() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "open.json", OPEN);
    let target = dir.path().join("report.json");
    let out = run(&["classify", s(&spec), "--out", s(&target)]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&target).unwrap()).unwrap();
    assert_eq!(report["case"], "OpenControlSet");
}

#[test]
fn simulate_degenerate_zero_control_is_constant() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "deg.json", DEGENERATE);
    let ctrl = write(&dir, "c.json", r#"{"segments": [{"duration": 3, "u": 0}]}"#);
    let out = run(&["simulate", s(&spec), "--control", s(&ctrl), "--x0", "0,1.5,-2", "--samples", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("s,t,v_x,v_y,u"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 5);
    for row in rows {
        let cols: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(&cols[1..4], &[0.0, 1.5, -2.0]);
    }
}

#[test]
fn simulate_verify_reports_small_deviation() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "open.json", OPEN);
    let ctrl = write(
        &dir,
        "c.json",
        r#"{"segments": [{"duration": 1.0, "u": 0.5}, {"duration": 0.7, "u": -1}, {"duration": 0.4, "u": 2.5}]}"#,
    );
    let out = run(&["simulate", s(&spec), "--control", s(&ctrl), "--verify"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let last = text.lines().last().unwrap();
    let dev: f64 = last.strip_prefix("# rk4_max_deviation,").unwrap().parse().unwrap();
    assert!(dev < 1e-8, "{dev}");

    // an impossible tolerance turns into a verification failure
    let out = run(&["simulate", s(&spec), "--control", s(&ctrl), "--verify", "--tol", "1e-30"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn simulate_rejects_control_outside_omega() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "open.json", OPEN);
    let ctrl = write(&dir, "c.json", r#"{"segments": [{"duration": 1.0, "u": 5}]}"#);
    let out = run(&["simulate", s(&spec), "--control", s(&ctrl)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_horizon_pads_with_zero_control() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "open.json", OPEN);
    let ctrl = write(&dir, "c.json", r#"{"segments": [{"duration": 1.0, "u": 0.5}]}"#);
    let out = run(&["simulate", s(&spec), "--control", s(&ctrl), "--horizon", "2", "--samples", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let last: Vec<&str> = text.lines().last().unwrap().split(',').collect();
    assert_eq!(last[0], "2");
    assert_eq!(last[4], "0");
}

#[test]
fn reach_reports_boundary_descriptor() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "open.json", OPEN);
    let csv = dir.path().join("cells.csv");
    let out = run(&["reach", s(&spec), "--resolution", "0.05", "--csv", s(&csv)]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["estimate"]["boundary"]["lifted"]["kind"], "periodic_orbit");
    assert!(v["estimate"]["occupied_cells"].as_u64().unwrap() > 100);
    let cells = std::fs::read_to_string(csv).unwrap();
    assert!(cells.starts_with("x,y\n"));
}

#[test]
fn reach_trace_zero_gives_all_plane() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "rot.json", ROTATION);
    let out = run(&["reach", s(&spec), "--resolution", "0.1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["estimate"]["all_plane"], true);
    assert!(v["estimate"]["coverage"]["coverage"].as_f64().unwrap() >= 0.99);
}

#[test]
fn reach_exit_codes() {
    let dir = TempDir::new().unwrap();
    let open = write(&dir, "open.json", OPEN);
    let out = run(&["reach", s(&open), "--bounds", "5,6,5,6"]);
    assert_eq!(out.status.code(), Some(2));
    let deg = write(&dir, "deg.json", DEGENERATE);
    let out = run(&["reach", s(&deg)]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn plan_closes_and_guards_case() {
    let dir = TempDir::new().unwrap();
    let rot = write(&dir, "rot.json", ROTATION);
    let out = run(&["plan", s(&rot), "--v0", "3,3"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(v["closure_error"].as_f64().unwrap() < 1e-8);

    let out = run(&["plan", s(&rot), "--v0", "0,0"]);
    assert_eq!(out.status.code(), Some(0));

    let open = write(&dir, "open.json", OPEN);
    let out = run(&["plan", s(&open), "--v0", "3,3"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tr A = 0"));
}

#[test]
fn verify_routes_suites() {
    let dir = TempDir::new().unwrap();
    let open = write(&dir, "open.json", OPEN);
    let out = run(&["verify", s(&open), "--samples", "100"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["passed"], true);

    let deg = write(&dir, "deg.json", DEGENERATE);
    let out = run(&["verify", s(&deg), "--samples", "50"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    for suite in v["suites"].as_array().unwrap() {
        let status = suite["status"].as_str().unwrap();
        match suite["suite"].as_str().unwrap() {
            "monotone" => assert_eq!(status, "passed"),
            "ball" | "conjugacy" => {
                assert_eq!(status, "skipped");
                assert!(suite["reason"].is_string());
            }
            _ => {}
        }
    }

    let out = run(&["verify", s(&open), "--suite", "nonsense"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn outputs_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let open = write(&dir, "open.json", OPEN);
    let a = run(&["verify", s(&open), "--samples", "50", "--seed", "7"]);
    let b = run(&["verify", s(&open), "--samples", "50", "--seed", "7"]);
    assert_eq!(a.stdout, b.stdout);
    let a = run(&["reach", s(&open), "--resolution", "0.05"]);
    let b = run(&["reach", s(&open), "--resolution", "0.05"]);
    assert_eq!(a.stdout, b.stdout);
}
