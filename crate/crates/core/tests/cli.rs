use std::path::Path;
use std::process::{Command, Output};

fn fxts() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fxts"))
}

fn configs(name: &str) -> String {
    format!("{}/configs/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn run_honours_output_dir_env() {
    let dir = tempfile::tempdir().unwrap();
    let out = fxts()
        .args(["run", "-c", &configs("quadratic_continuous.json")])
        .env("FXTS_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("fxts.csv").exists());
    assert!(dir.path().join("fxts.summary.json").exists());
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["converged"], true);
}

#[test]
fn malformed_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "bad.json", "{ not json");
    let out = fxts().args(["run", "-c", &path]).output().unwrap();
    assert_eq!(code(&out), 2);
    let path = write(
        dir.path(),
        "invalid.json",
        r#"{"version": 1, "problem": {"name": "rosenbrock"}, "optimizer": {"name": "gd"}, "x0": [0, 0], "lr": -1}"#,
    );
    let out = fxts().args(["run", "-c", &path]).output().unwrap();
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("eta_or_lr"));
}

#[test]
fn missing_config_exits_2() {
    let out = fxts().args(["run", "-c", "/nonexistent/run.json"]).output().unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn unknown_suite_exits_2() {
    let out = fxts().args(["verify", "nonsense"]).output().unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn passing_suite_exits_0_with_json() {
    let out = fxts().args(["verify", "gradients", "--format", "json"]).output().unwrap();
    assert_eq!(code(&out), 0);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["suite"], "gradients");
    assert_eq!(report["checks"].as_array().unwrap().len(), 4);
}

#[test]
fn failing_check_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    // demands a gradient error below zero, which no floating-point check meets
    let overrides = write(dir.path(), "opts.json", r#"{"fd_tol": 0.0}"#);
    let out = fxts().args(["verify", "gradients", "-c", &overrides]).output().unwrap();
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn unknown_override_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let overrides = write(dir.path(), "opts.json", r#"{"fd_tolerance": 1.0}"#);
    let out = fxts().args(["verify", "gradients", "-c", &overrides]).output().unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn sweep_writes_long_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = fxts()
        .args(["sweep", "-c", &configs("sweep.json"), "--axis", "eta_or_lr", "--values", "0.001,0.0005"])
        .env("FXTS_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert!(csv.lines().skip(1).any(|l| l.starts_with("0.0005,")));
}

#[test]
fn fixtures_check_passes() {
    let out = fxts().args(["fixtures", "check"]).output().unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn fixtures_regen_reports_drift_without_overwriting() {
    let dir = tempfile::tempdir().unwrap();
    let bundled = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/fixtures.json")).unwrap();
    let stored = dir.path().join("stored.json");
    let fresh = dir.path().join("fresh.json");
    std::fs::write(&stored, bundled.replace("943.0", "944.0")).unwrap();
    let out = fxts()
        .args(["fixtures", "regen", "--path", &stored.to_string_lossy(), "--out", &fresh.to_string_lossy()])
        .output()
        .unwrap();
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stdout).contains("MISMATCH k_star_half_modulus"));
    assert!(std::fs::read_to_string(&stored).unwrap().contains("944.0"));
    assert_eq!(std::fs::read_to_string(&fresh).unwrap(), bundled);
}
