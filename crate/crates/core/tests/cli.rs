use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn config(name: &str) -> PathBuf {
    root().join("configs").join(name)
}

fn golden(name: &str) -> Value {
    let text = std::fs::read_to_string(root().join("docs/golden").join(name)).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ccurves-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn ccurves(args: &[&str], out_root: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ccurves"));
    cmd.args(args);
    if let Some(r) = out_root {
        cmd.env("CCURVES_OUT", r);
    }
    cmd.output().unwrap()
}

fn json_stdout(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

/// Structural equality with a relative tolerance on numbers.
fn close(a: &Value, b: &Value, tol: f64) -> bool {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64().unwrap(), y.as_f64().unwrap());
            (x - y).abs() <= tol * (1.0 + x.abs().max(y.abs()))
        }
        (Value::Array(x), Value::Array(y)) => x.len() == y.len() && x.iter().zip(y).all(|(p, q)| close(p, q, tol)),
        (Value::Object(x), Value::Object(y)) => {
            x.len() == y.len() && x.iter().all(|(k, v)| y.get(k).is_some_and(|w| close(v, w, tol)))
        }
        _ => a == b,
    }
}

#[test]
fn bodies_matches_golden() {
    let c = config("balls12.toml");
    let o = ccurves(&["bodies", "--config", c.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0));
    let v = json_stdout(&o);
    assert!(close(&v, &golden("balls12_bodies.json"), 1e-12), "{v}");
    assert!((v[0]["dee"].as_f64().unwrap() - 2.0 / 3f64.sqrt()).abs() < 1e-9);
}

#[test]
fn exhaust_matches_golden() {
    let c = config("six_balls.toml");
    let o = ccurves(&["exhaust", "--config", c.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0));
    assert!(close(&json_stdout(&o), &golden("six_balls_exhaust.json"), 1e-12));
}

#[test]
fn exhaust_unreachable_target_is_a_verification_failure() {
    let c = config("balls12.toml");
    let o = ccurves(&["exhaust", "--config", c.to_str().unwrap(), "--target", "3"], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn net_reports_bound_and_oracle() {
    let c = config("balls12.toml");
    let dir = scratch("net");
    let o = ccurves(&["net", "--config", c.to_str().unwrap(), "--out", dir.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0));
    let v = json_stdout(&o);
    assert!(close(&v, &golden("balls12_net.json"), 1e-9), "{v}");
    let written: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("net.json")).unwrap()).unwrap();
    assert_eq!(written, v);
    let _ = std::fs::remove_dir_all(dir);
}

#[test]
fn desing_matches_golden() {
    let c = config("zetaxi.toml");
    let o = ccurves(&["desing", "--config", c.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0));
    assert!(close(&json_stdout(&o), &golden("zetaxi_desing.json"), 1e-9));
}

#[test]
fn run_and_audit_use_the_output_root() {
    let c = config("chain3.toml");
    let out = scratch("run");
    let o = ccurves(&["run", "--config", c.to_str().unwrap()], Some(&out));
    // The lemma net of the first iteration exceeds the stretch cap.
    assert_eq!(o.status.code(), Some(2));
    let dir = out.join("chain3");
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    assert!(close(&report, &golden("chain3_report.json"), 1e-9), "{report}");
    let curve: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("curve.json")).unwrap()).unwrap();
    assert_eq!(curve, golden("chain3_curve.json"));
    let path = std::fs::read_to_string(dir.join("oracle_path_1.csv")).unwrap();
    let want = std::fs::read_to_string(root().join("docs/golden/chain3_oracle_path_1.csv")).unwrap();
    assert_eq!(path, want);
    let samples = std::fs::read_to_string(dir.join("curve_samples.csv")).unwrap();
    assert!(samples.starts_with("param_re,param_im,re1,im1,re2,im2\n"));

    let o = ccurves(&["audit", "--config", c.to_str().unwrap()], Some(&out));
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json_stdout(&o)["measured"].as_f64(), Some(0.0));
    let _ = std::fs::remove_dir_all(out);
}

#[test]
fn depth_zero_run_passes() {
    let c = config("balls12.toml");
    let out = scratch("depth0");
    let o = ccurves(&["run", "--config", c.to_str().unwrap(), "--depth", "0"], Some(&out));
    assert_eq!(o.status.code(), Some(0));
    assert!(out.join("balls12/report.json").exists());
    let _ = std::fs::remove_dir_all(out);
}

#[test]
fn usage_errors_exit_one() {
    let c = config("balls12.toml");
    let c = c.to_str().unwrap();
    assert_eq!(ccurves(&["bodies", "--config", c, "--bogus"], None).status.code(), Some(1));
    assert_eq!(ccurves(&["frobnicate"], None).status.code(), Some(1));
    assert_eq!(ccurves(&["bodies"], None).status.code(), Some(1));
    assert_eq!(ccurves(&["bodies", "--config", "/nonexistent/run.toml"], None).status.code(), Some(1));
    assert_eq!(ccurves(&["net", "--config", c, "--resolution", "-1"], None).status.code(), Some(1));
    assert_eq!(ccurves(&["--help"], None).status.code(), Some(0));
}

#[test]
fn audit_without_a_run_is_a_usage_error() {
    let c = config("balls12.toml");
    let out = scratch("noaudit");
    assert_eq!(ccurves(&["audit", "--config", c.to_str().unwrap()], Some(&out)).status.code(), Some(1));
}

#[test]
fn invalid_eps_is_a_usage_error() {
    let dir = scratch("badeps");
    std::fs::create_dir_all(&dir).unwrap();
    let text = std::fs::read_to_string(config("balls12.toml")).unwrap().replace("eps0 = 0.1", "eps0 = 1.5");
    let path = dir.join("bad.toml");
    std::fs::write(&path, text).unwrap();
    assert_eq!(ccurves(&["net", "--config", path.to_str().unwrap()], None).status.code(), Some(1));
    let _ = std::fs::remove_dir_all(dir);
}
