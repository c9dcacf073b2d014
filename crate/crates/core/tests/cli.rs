use std::path::Path;
use std::process::Command;

fn wong(args: &[&str], out: &Path) -> (i32, serde_json::Value) {
    let o = Command::new(env!("CARGO_BIN_EXE_wong")).args(args).arg("--out").arg(out).output().unwrap();
    let json = serde_json::from_slice(&o.stdout).unwrap_or(serde_json::Value::Null);
    (o.status.code().unwrap(), json)
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn run_succeeds_and_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "system = \"kk_trivial_u1\"\nfield_strength = 2.0\n[state]\nq_star = [0.0, 0.0, 0.0]\nv = [1.0, 0.0, 0.0]\np = [0.5]\n[integrator]\ndt = 0.01\nn_steps = 50");
    let (code, json) = wong(&["run", "--config", &cfg], dir.path());
    assert_eq!(code, 0, "{json}");
    assert_eq!(json["status"], "passed");
    assert!(dir.path().join("trajectory.csv").exists());
    assert!(dir.path().join("diagnostics.json").exists());
}

#[test]
fn json_configs_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"system": "so2_halfplane", "samples": 3}"#);
    let (code, json) = wong(&["check", "--config", &cfg], dir.path());
    assert_eq!(code, 0, "{json}");
}

#[test]
fn check_by_system_name() {
    let dir = tempfile::tempdir().unwrap();
    let (code, json) = wong(&["check", "--system", "hopf_s3"], dir.path());
    assert_eq!(code, 0, "{json}");
    assert!(json["monitors"].as_array().unwrap().iter().all(|m| m["ok"] == true));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", "system = \"so2_halfplane\"\n[integrator]\ndt = -1.0");
    assert_eq!(wong(&["run", "--config", &bad], dir.path()).0, 2);
    let unknown = write(dir.path(), "u.toml", "system = \"nowhere\"");
    assert_eq!(wong(&["run", "--config", &unknown], dir.path()).0, 2);
    assert_eq!(wong(&["run", "--config", "/does/not/exist.toml"], dir.path()).0, 2);
}

#[test]
fn numerical_failure_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "system = \"su2_twovector\"\nseed = 1\n[integrator]\ndt = 0.05\nn_steps = 10\n[tolerances]\nenergy = 1e-30");
    let (code, json) = wong(&["run", "--config", &cfg], dir.path());
    assert_eq!(code, 1, "{json}");
    assert_eq!(json["status"], "failed");
}

#[test]
fn lattice_bridge_check() {
    let dir = tempfile::tempdir().unwrap();
    let (code, json) = wong(&["ym-bridge-check", "--L", "2", "--d", "2", "--group", "su2"], dir.path());
    assert_eq!(code, 0, "{json}");
}

#[test]
fn empty_sweep_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.toml", "runs = []");
    assert_eq!(wong(&["sweep", "--config", &cfg], dir.path()).0, 0);
}
