//! End-to-end tests of the command-line tool: the documented error surfaces
//! and one full ingest → simulate → verify round trip per input kind. The
//! artifact byte-identity criterion lives in tests/acceptance.rs.

mod common;

use std::fs;

use common::{assert_ok, error_kind, read_bytes, run, write_identity_moments, write_returns_csv};

// ---------------------------------------------------------------------------
// Ingestion surface.
// ---------------------------------------------------------------------------

#[test]
fn time_column_flag_and_autodetection_agree() {
    let dir = tempfile::tempdir().unwrap();
    write_returns_csv(&dir.path().join("returns.csv"), 40);
    assert_ok(
        &run(dir.path(), &["ingest", "returns.csv", "--time-col", "0", "--out", "flagged.json"]),
        "ingest with --time-col",
    );
    assert_ok(
        &run(dir.path(), &["ingest", "returns.csv", "--out", "auto.json"]),
        "ingest with auto-detection",
    );
    let flagged: serde_json::Value =
        serde_json::from_slice(&read_bytes(&dir.path().join("flagged.json"))).unwrap();
    let auto: serde_json::Value =
        serde_json::from_slice(&read_bytes(&dir.path().join("auto.json"))).unwrap();
    assert_eq!(flagged["n"], 3);
    assert_eq!(flagged["m"], 40);
    assert_eq!(flagged["variables"], serde_json::json!(["eq", "fx", "rate"]));
    assert_eq!(flagged["mu"], auto["mu"]);
    assert_eq!(flagged["v"], auto["v"]);
    assert_eq!(flagged["tau"], auto["tau"]);
}

#[test]
fn nan_cell_reports_exact_location() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.csv"), "a,b\n1.0,2.0\n3.0,NaN\n").unwrap();
    let out = run(dir.path(), &["ingest", "bad.csv", "--out", "x.json"]);
    let (kind, message) = error_kind(&out);
    assert_eq!(kind, "non-finite");
    assert!(message.contains("line 3"), "message: {message}");
    assert!(message.contains("column 2"), "message: {message}");
}

#[test]
fn ragged_row_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("ragged.csv"), "a,b\n1.0,2.0\n3.0\n").unwrap();
    let out = run(dir.path(), &["ingest", "ragged.csv", "--out", "x.json"]);
    let (kind, message) = error_kind(&out);
    assert_eq!(kind, "ragged-rows");
    assert!(message.contains("line 3"), "message: {message}");
}

#[test]
fn unparseable_cell_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("junk.csv"), "a,b\n1.0,oops\n").unwrap();
    let out = run(dir.path(), &["ingest", "junk.csv", "--out", "x.json"]);
    let (kind, message) = error_kind(&out);
    assert_eq!(kind, "parse-error");
    assert!(message.contains("line 2"), "message: {message}");
}

#[test]
fn asymmetric_covariance_is_rejected_on_load() {
    let dir = tempfile::tempdir().unwrap();
    let doc = serde_json::json!({
        "mu": [0.0, 0.0],
        "v": [[1.0, 0.3], [0.1, 1.0]],
        "tau": [0.0, 0.0],
    });
    fs::write(dir.path().join("moments.json"), doc.to_string()).unwrap();
    let out = run(
        dir.path(),
        &["simulate", "--targets", "moments.json", "-m", "20", "--out", "x.csv"],
    );
    let (kind, message) = error_kind(&out);
    assert_eq!(kind, "config");
    assert!(message.contains("asymmetric"), "message: {message}");
}

// ---------------------------------------------------------------------------
// Simulation surface.
// ---------------------------------------------------------------------------

#[test]
fn reference_targets_with_bootstrap_source_verify() {
    let dir = tempfile::tempdir().unwrap();
    write_returns_csv(&dir.path().join("returns.csv"), 48);
    write_identity_moments(&dir.path().join("case1.json"), &[-6.44, -2.22, -2.97]);
    // The heavy joint skewness (rotated first coordinate ≈ −2.24) needs a
    // tame σ² so the per-column admissibility bands stay wide.
    assert_ok(
        &run(
            dir.path(),
            &[
                "simulate", "--targets", "case1.json", "-m", "500", "--source",
                "bootstrap:returns.csv", "--sigma2", "0.2", "--seed", "11", "--out", "case1.csv",
            ],
        ),
        "case-1 simulate",
    );
    let manifest: serde_json::Value =
        serde_json::from_slice(&read_bytes(&dir.path().join("case1.csv.manifest.json"))).unwrap();
    let verification = &manifest["verification"];
    assert_eq!(verification["passed"], true);
    assert!(verification["mean_abs_error"].as_f64().unwrap() <= 1e-10);
    assert!(verification["cov_rel_error"].as_f64().unwrap() <= 1e-8);
    assert!(verification["kollo_abs_error"].as_f64().unwrap() <= 1e-6);
    // 500 observation rows plus the header.
    let sample = String::from_utf8(read_bytes(&dir.path().join("case1.csv"))).unwrap();
    assert_eq!(sample.lines().count(), 501);
}

#[test]
fn infeasible_variance_exits_with_engine_error() {
    let dir = tempfile::tempdir().unwrap();
    write_identity_moments(&dir.path().join("wide.json"), &[0.0; 20]);
    let out = run(
        dir.path(),
        &[
            "simulate", "--targets", "wide.json", "-m", "50", "--sigma2", "0.95",
            "--max-attempts", "30", "--seed", "3", "--out", "x.csv",
        ],
    );
    let (kind, message) = error_kind(&out);
    assert_eq!(kind, "admissibility-exhausted");
    assert!(message.contains("30 attempts"), "message: {message}");
}

// ---------------------------------------------------------------------------
// Experiment commands.
// ---------------------------------------------------------------------------

#[test]
fn default_failure_rate_grid_has_32_cells() {
    let dir = tempfile::tempdir().unwrap();
    assert_ok(
        &run(
            dir.path(),
            &["failure-rate", "--trials", "40", "--seed", "5", "--out", "rates.csv"],
        ),
        "default failure-rate grid",
    );
    let text = String::from_utf8(read_bytes(&dir.path().join("rates.csv"))).unwrap();
    assert_eq!(text.lines().count(), 33, "header plus 32 grid cells");
    let header = text.lines().next().unwrap();
    assert_eq!(
        header,
        "n,m,sigma2,trials,alpha1,alpha,alpha1_theory,verified,verify_mismatches"
    );
}

#[test]
fn bench_reports_a_ratio_above_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_ok(
        &run(
            dir.path(),
            &["bench", "-n", "5", "-m", "25", "--count", "10", "--seed", "3", "--out", "bench.json"],
        ),
        "bench",
    );
    let artifact: serde_json::Value =
        serde_json::from_slice(&read_bytes(&dir.path().join("bench.json"))).unwrap();
    let ratio = artifact["report"]["ratio"].as_f64().unwrap();
    assert!(ratio > 1.0, "closed form should beat the baseline, ratio {ratio}");
}

#[test]
fn rolling_window_too_large_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    write_returns_csv(&dir.path().join("returns.csv"), 30);
    let out = run(
        dir.path(),
        &["rolling", "--data", "returns.csv", "--window", "100", "--out", "x.csv"],
    );
    let (kind, _) = error_kind(&out);
    assert_eq!(kind, "window-too-large");
}

#[test]
fn out_of_range_skewness_names_the_attainable_interval() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["attainable", "sn", "0.996"]);
    let (kind, message) = error_kind(&out);
    assert_eq!(kind, "skewness-out-of-range");
    assert!(
        message.contains("out of range (-0.995, 0.995)"),
        "message: {message}"
    );
}
