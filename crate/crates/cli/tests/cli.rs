use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn tripledeck(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tripledeck"))
        .args(args)
        .current_dir(dir)
        .env_remove("TRIPLEDECK_OUTPUT")
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    v.sort();
    v
}

const ZERO_END: &str = r#"
[grid]
n_modes = 16
lx = 2.0
n_y = 65
y_max = 12.0

[stepper]
dt = 1e-4
t_end = 0.0

[initial]
preset = "small-data-certified"
"#;

#[test]
fn zero_end_time_writes_manifest_and_one_row() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("run.toml"), ZERO_END).unwrap();
    let out = tripledeck(&["run", "--config", "run.toml", "--output", "o"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("o");
    assert_eq!(files(&dir), ["ledger.csv", "manifest.json"]);
    assert_eq!(fs::read_to_string(dir.join("ledger.csv")).unwrap().lines().count(), 2);
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["parameters"]["n_steps"], 0);
    assert!(manifest["config"].as_str().unwrap().contains("small-data-certified"));
}

#[test]
fn bad_config_exits_1_without_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("run.toml"), ZERO_END.replace("n_y = 65", "n_yy = 65")).unwrap();
    let out = tripledeck(&["run", "--config", "run.toml", "--output", "o"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(!tmp.path().join("o").exists());

    fs::write(tmp.path().join("r2.toml"), ZERO_END.replace("[stepper]", "[stepper]\ncertified = true")).unwrap();
    let out = tripledeck(&["run", "--config", "r2.toml", "--output", "o"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(!tmp.path().join("o").exists());
}

#[test]
fn corrupt_resume_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("bad.tdk"), b"TDKSIM01 not really").unwrap();
    let out = tripledeck(&["run", "--preset", "heat-column", "--resume", "bad.tdk", "--output", "o"], tmp.path());
    assert_eq!(out.status.code(), Some(4));
    assert!(!tmp.path().join("o").exists());
}

#[test]
fn certified_run_is_deterministic_and_reauditable() {
    let tmp = tempfile::tempdir().unwrap();
    for (dir, threads) in [("a", "1"), ("b", "3")] {
        let out = tripledeck(&["run", "--certified", "--threads", threads, "--output", dir], tmp.path());
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for f in ["ledger.csv", "manifest.json", "audit_identities.csv", "checkpoint_00000064.tdk"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["certified_check"]["pass"], true);
    assert_eq!(manifest["termination"], "t-end");

    let before = fs::read(a.join("audit_lemma.csv")).unwrap();
    fs::remove_file(a.join("audit_lemma.csv")).unwrap();
    let out = tripledeck(&["audit", "--output", "a"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read(a.join("audit_lemma.csv")).unwrap(), before);
}

#[test]
fn output_directory_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_tripledeck"))
        .args(["blasius"])
        .current_dir(tmp.path())
        .env("TRIPLEDECK_OUTPUT", "env-out")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    let fpp0: f64 = stdout.split_whitespace().nth(2).unwrap().parse().unwrap();
    assert!((fpp0 - 0.4696).abs() < 1e-4, "{stdout}");
    assert_eq!(files(&tmp.path().join("env-out")), ["blasius.csv", "blasius.json"]);
}

#[test]
fn reconstruct_from_a_checkpoint() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tripledeck(&["run", "--certified", "--output", "run"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let out = tripledeck(
        &["reconstruct", "--checkpoint", "run/checkpoint_00000064.tdk", "--nu", "1e-2", "--nu", "1e-4", "--output", "rec"],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("rec/reconstruct.json")).unwrap()).unwrap();
    assert_eq!(summary["levels"].as_array().unwrap().len(), 2);
    assert!(summary["slope"].as_f64().unwrap() > 0.0);
}

#[test]
fn selftest_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tripledeck(&["selftest"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(!String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}
