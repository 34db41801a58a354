use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const GOLDEN: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/tests/golden");

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_radial-shooter"))
        .args(args)
        .current_dir(dir)
        .env_remove("RADIAL_SHOOTER_JOBS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn without_timing(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("wall_clock_ms");
    v
}

#[test]
fn solve_writes_trajectory_phase_and_events() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &[
            "solve",
            "--model",
            "power-diff",
            "--p",
            "3",
            "--N",
            "3",
            "--alpha",
            "2",
            "--out",
            "t.csv",
            "--phase",
            "p.csv",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let traj = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
    assert!(traj.starts_with("r,u,du,I\n"));
    assert!(traj.lines().count() > 10);
    let phase = std::fs::read_to_string(dir.path().join("p.csv")).unwrap();
    assert!(phase.starts_with("u,J,r\n"));
    let events: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(events
        .as_array()
        .unwrap()
        .iter()
        .any(|e| e["kind"] == "CrossB"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("termination"));
}

#[test]
fn solve_at_the_equilibrium_reports_a_constant_solution() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["solve", "--alpha", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("constant solution"));
    assert!(dir.path().join("trajectory.csv").exists());
}

#[test]
fn solve_without_alpha_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["solve", "--model", "power-diff"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn classify_prints_the_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["classify", "--alpha", "10"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "N 1");
    let o = run(dir.path(), &["classify", "--alpha", "3"]);
    assert_eq!(stdout(&o).trim(), "P 1");
}

#[test]
fn scan_emits_one_row_per_alpha_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["scan", "--from", "1.5", "--to", "12", "--n", "50"];
    let a = stdout(&run(dir.path(), &args));
    let b = stdout(&run(dir.path(), &args));
    assert_eq!(a.lines().count(), 51);
    let strip = |s: &str| -> Vec<String> {
        s.lines()
            .map(|l| l.rsplit_once(',').unwrap().0.to_string())
            .collect()
    };
    assert_eq!(strip(&a), strip(&b));
    let o = run(
        dir.path(),
        &[
            "scan", "--from", "1.5", "--to", "12", "--n", "5", "--format", "json",
        ],
    );
    let rows: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 5);
}

#[test]
fn find_converges_in_either_bracket_order() {
    let dir = tempfile::tempdir().unwrap();
    for bracket in [["3", "8"], ["8", "3"]] {
        let o = run(
            dir.path(),
            &[
                "find",
                "--k",
                "1",
                "--bracket",
                bracket[0],
                bracket[1],
                "--tol",
                "1e-10",
            ],
        );
        assert_eq!(o.status.code(), Some(0));
        let rec: Value = serde_json::from_str(&stdout(&o)).unwrap();
        let b = rec["bracket"].as_array().unwrap();
        let width = (b[1].as_f64().unwrap() - b[0].as_f64().unwrap()).abs();
        assert!(width < 1e-10, "{width}");
    }
}

#[test]
fn find_without_a_sign_change_fails_with_code_4() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["find", "--k", "1", "--bracket", "2", "3"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn run_config_file_is_used_and_validated() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.json"),
        r#"{"model": {"model": "power-diff", "p": 3}, "alpha": 10, "params": {"N": 3}}"#,
    )
    .unwrap();
    let o = run(dir.path(), &["classify", "--config", "run.json"]);
    assert_eq!(stdout(&o).trim(), "N 1");
    std::fs::write(dir.path().join("bad.json"), r#"{"alpha": 10, "colour": 1}"#).unwrap();
    let o = run(dir.path(), &["classify", "--config", "bad.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_suites() {
    let dir = tempfile::tempdir().unwrap();
    for suite in ["functionals", "shape", "lemma-epsilon", "scaling"] {
        let o = run(dir.path(), &["verify", "--suite", suite]);
        assert_eq!(o.status.code(), Some(0), "{suite}");
        let rep: Value = serde_json::from_str(&stdout(&o)).unwrap();
        assert_eq!(rep["passed"], true);
    }
    let o = run(dir.path(), &["verify", "--suite", "nope"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn experiment_a_golden_reproduces_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{GOLDEN}/theorem_a_k1.json");
    let o = run(
        dir.path(),
        &["experiment", "a", "--config", &cfg, "--csv", "inv.csv"],
    );
    assert_eq!(o.status.code(), Some(0));
    let rep: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let ground = rep["cells"][0]["inventory"]["states"]["1"]
        .as_array()
        .unwrap();
    assert!(ground.len() >= 2);
    let csv = std::fs::read_to_string(dir.path().join("inv.csv")).unwrap();
    assert!(csv.starts_with("mu,lambda,class,alpha_star"));

    // The embedded config reproduces the report apart from timing.
    std::fs::write(dir.path().join("embedded.json"), rep["config"].to_string()).unwrap();
    let again = run(
        dir.path(),
        &[
            "experiment",
            "a",
            "--config",
            "embedded.json",
            "--jobs",
            "1",
        ],
    );
    let rep2: Value = serde_json::from_str(&stdout(&again)).unwrap();
    assert_eq!(without_timing(rep), without_timing(rep2));
}

#[test]
fn experiment_b_golden_reports_exclusion() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{GOLDEN}/theorem_b_k1.json");
    let o = run(
        dir.path(),
        &[
            "experiment",
            "b",
            "--config",
            &cfg,
            "--out",
            "rep.json",
            "--freeze-golden",
            "g.json",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let rep: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("rep.json")).unwrap())
            .unwrap();
    let checks = rep["checks"].as_array().unwrap();
    assert!(checks
        .iter()
        .any(|c| c["name"].as_str().unwrap().starts_with("exclusion") && c["pass"] == true));
    let frozen: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("g.json")).unwrap()).unwrap();
    let golden: Value = serde_json::from_str(&std::fs::read_to_string(&cfg).unwrap()).unwrap();
    assert_eq!(frozen, golden);
}

#[test]
fn malformed_experiment_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("x.json"), "{ not json").unwrap();
    for which in ["a", "b"] {
        let o = run(dir.path(), &["experiment", which, "--config", "x.json"]);
        assert_eq!(o.status.code(), Some(2));
    }
    let o = run(dir.path(), &["experiment", "a", "--config", "missing.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn jobs_flag_and_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["--jobs", "0", "classify", "--alpha", "10"]);
    assert_eq!(o.status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_radial-shooter"))
        .args(["scan", "--from", "2", "--to", "3", "--n", "3"])
        .env("RADIAL_SHOOTER_JOBS", "1")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 4);
}
