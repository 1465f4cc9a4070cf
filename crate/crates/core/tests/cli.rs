use std::path::PathBuf;
use std::process::{Command, Output};

fn nbanach(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nbanach")).args(args).output().expect("spawn nbanach")
}

fn write_config(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("nbanach-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON document")
}

#[test]
fn default_axioms_pass() {
    let out = nbanach(&["check-axioms", "--samples", "20"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["arithmetic_mode"], "approximate");
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn exact_flag_switches_mode() {
    let out = nbanach(&["invert", "--exact", "--samples", "5", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["arithmetic_mode"], "exact");
    assert_eq!(v["seed"], 3);
}

#[test]
fn eq21_multiplicativity_fails() {
    let path = write_config(
        "eq21.json",
        r#"{"instance": {"kind": "series", "degree": 4, "n": 2, "variant": "eq21_max_product"},
            "checks": ["multiplicativity_audit"]}"#,
    );
    let out = nbanach(&["run", "--config", path.to_str().unwrap(), "--samples", "50"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout_json(&out)["summary"]["fail"], 1);
}

#[test]
fn unknown_check_is_a_config_error() {
    let path = write_config(
        "typo.json",
        r#"{"instance": {"kind": "pointwise", "dim": 3, "n": 2}, "checks": ["speectrum"]}"#,
    );
    let out = nbanach(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("speectrum"));
}

#[test]
fn missing_config_file_exits_2() {
    let out = nbanach(&["run", "--config", "/nonexistent/nbanach.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn negative_tolerance_exits_2() {
    let out = nbanach(&["audit", "--tol=-1"]);
    assert_eq!(out.status.code(), Some(2));
}
