//! Helpers shared by the e2e test targets: spawning the binary and writing
//! deterministic fixture files.

#![allow(dead_code)] // each test target uses its own subset

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

pub fn krom_bin() -> &'static str {
    env!("CARGO_BIN_EXE_krom")
}

/// Run the binary in `dir` with a scrubbed KROM_SEED.
pub fn run(dir: &Path, args: &[&str]) -> Output {
    run_env(dir, args, &[])
}

pub fn run_env(dir: &Path, args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(krom_bin());
    cmd.current_dir(dir).args(args).env_remove("KROM_SEED");
    for (key, value) in envs {
        cmd.env(key, value);
    }
    cmd.output().expect("spawn krom")
}

pub fn assert_ok(out: &Output, what: &str) {
    assert!(
        out.status.success(),
        "{what} exited nonzero: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Parse the machine-readable error JSON from stderr and return its kind.
pub fn error_kind(out: &Output) -> (String, String) {
    assert!(
        !out.status.success(),
        "expected a nonzero exit, got success with stdout: {}",
        String::from_utf8_lossy(&out.stdout)
    );
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.trim().lines().last().unwrap_or_default();
    let json: serde_json::Value = serde_json::from_str(line)
        .unwrap_or_else(|e| panic!("stderr is not error JSON ({e}): {text}"));
    assert_eq!(json["schema"], "krom/1", "error JSON misses the schema tag");
    (
        json["error"]["kind"].as_str().unwrap_or_default().to_string(),
        json["error"]["message"].as_str().unwrap_or_default().to_string(),
    )
}

/// Deterministic skewed three-variable series with a leading date column.
pub fn write_returns_csv(path: &Path, rows: usize) {
    let mut text = String::from("date,eq,fx,rate\n");
    for i in 0..rows {
        let t = i as f64;
        let a = (0.7 * t).sin() + 0.3 * (3.1 * t + 1.0).sin().powi(3);
        let b = 0.5 * a + 0.2 * (1.3 * t).cos() * (1.0 + 0.5 * (0.9 * t).sin());
        let c = 0.8 * (0.3 * t).cos() + 0.1 * (2.2 * t).sin().powi(2);
        text += &format!("d{i},{a:.12e},{b:.12e},{c:.12e}\n");
    }
    fs::write(path, text).unwrap();
}

/// Minimal moments file: mean zero, identity covariance, given skewness.
pub fn write_identity_moments(path: &Path, tau: &[f64]) {
    let n = tau.len();
    let v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect())
        .collect();
    let doc = serde_json::json!({
        "schema": "krom/1",
        "mu": vec![0.0; n],
        "v": v,
        "tau": tau,
    });
    fs::write(path, serde_json::to_string_pretty(&doc).unwrap()).unwrap();
}

pub fn read_bytes(path: &Path) -> Vec<u8> {
    fs::read(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}
