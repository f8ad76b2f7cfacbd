//! End-to-end tests of the `symflow` binary: exit codes, report formats,
//! determinism of the emitted bytes, and the seed override.

use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn symflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_symflow"))
        .args(args)
        .env_remove("SYMFLOW_SEED")
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn check_symmetry_passes_with_exit_zero() {
    let f = fixture("example1.json");
    let out = symflow(&["check", f.to_str().unwrap(), "--what", "symmetry", "--name", "X"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["check"], "standard-symmetry");
    assert_eq!(v["verdict"], "pass");
    assert_eq!(v["points_sampled"], 500);
    assert!(v["max_residual"].as_f64().unwrap() <= 1e-8);
    // The worst point carries named coordinates.
    assert!(v["worst_point"]["x"].is_f64());
    assert!(v["worst_point"]["t"].is_f64());
}

#[test]
fn check_reduced_on_nonreduced_chart_exits_one() {
    let f = fixture("example4.json");
    let out = symflow(&["check", f.to_str().unwrap(), "--what", "reduced"]);
    assert_eq!(out.status.code(), Some(1));
    let v = stdout_json(&out);
    assert_eq!(v["classification"], "not-reduced");
    assert_eq!(v["flagged_invariants"], serde_json::json!([3]));
    assert_eq!(v["verdict"], "fail");
    // The chart itself fails rectification here (X zeta = 2), which the
    // payload reports without masking the classification.
    assert_eq!(v["chart_verified"], false);
}

#[test]
fn lambda_and_capital_lambda_checks_pass() {
    for (file, what) in [("example3.json", "lambda-symmetry"), ("example4.json", "capital-lambda-symmetry")] {
        let f = fixture(file);
        let out = symflow(&[
            "check",
            f.to_str().unwrap(),
            "--what",
            "symmetry",
            "--tol",
            "1e-10",
        ]);
        assert_eq!(out.status.code(), Some(0), "{file}");
        let v = stdout_json(&out);
        assert_eq!(v["check"], what);
        assert_eq!(v["verdict"], "pass");
    }
}

#[test]
fn schema_violation_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    // Missing `f` (and no hamiltonian block).
    std::fs::write(
        &path,
        r#"{ "name": "broken", "variables": ["x"], "constants": [] }"#,
    )
    .unwrap();
    let out = symflow(&["check", path.to_str().unwrap(), "--what", "symmetry"]);
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("/f"), "stderr was: {msg}");

    // Unparsable expression, with a JSON-pointer-ish path.
    std::fs::write(
        &path,
        r#"{ "name": "broken", "variables": ["x"], "f": ["x +"] }"#,
    )
    .unwrap();
    let out = symflow(&["check", path.to_str().unwrap(), "--what", "symmetry"]);
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("/f/0"), "stderr was: {msg}");

    // Unknown flags are usage errors (clap exits 2).
    let out = symflow(&["check", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let f = fixture("example1.json");
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a.json");
    let out_b = dir.path().join("b.json");
    for (path, _) in [(&out_a, 0), (&out_b, 1)] {
        let out = symflow(&[
            "check",
            f.to_str().unwrap(),
            "--what",
            "chart",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    let a = std::fs::read(&out_a).unwrap();
    let b = std::fs::read(&out_b).unwrap();
    assert_eq!(a, b);
}

#[test]
fn seed_env_var_overrides_file_seed() {
    let f = fixture("example1.json");
    let out = Command::new(env!("CARGO_BIN_EXE_symflow"))
        .args(["check", f.to_str().unwrap(), "--what", "symmetry", "--name", "X"])
        .env("SYMFLOW_SEED", "777")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["seed"], 777);
}

#[test]
fn estimate_lambda_table_matches_the_scalar() {
    let f = fixture("example3.json");
    let out = symflow(&["estimate-lambda", f.to_str().unwrap(), "--points", "50"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert_eq!(header, "q1,q2,p1,p2,t,lambda_hat,defect");
    let mut rows = 0;
    for line in lines {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        let (p1, lambda_hat, defect) = (cols[2], cols[5], cols[6]);
        assert!((lambda_hat - 1.5 * p1 * p1).abs() <= 1e-8, "row: {line}");
        assert!(defect <= 1e-10, "row: {line}");
        rows += 1;
    }
    assert_eq!(rows, 50);
    let summary = String::from_utf8(out.stderr).unwrap();
    assert!(summary.contains("\"scalar_lambda_fits\":true"));

    // The matrix-lambda system admits no scalar: defects stay positive.
    let f = fixture("example4.json");
    let out = symflow(&["estimate-lambda", f.to_str().unwrap(), "--points", "50"]);
    assert_eq!(out.status.code(), Some(0));
    let summary = String::from_utf8(out.stderr).unwrap();
    assert!(summary.contains("\"scalar_lambda_fits\":false"));
    assert!(summary.contains("no scalar lambda fits"));
}

#[test]
fn ovsjannikov_json_output() {
    let f = fixture("example1.json");
    let out = symflow(&[
        "ovsjannikov",
        f.to_str().unwrap(),
        "--at",
        "x=0.6,y=1.1,z=0.9,t=0.3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["p"].as_array().unwrap().len(), 3);
    assert!(v["identity_error"].as_f64().unwrap() <= 1e-12);
    for r in v["residuals"].as_array().unwrap() {
        assert!(r.as_f64().unwrap() <= 1e-6);
    }
}

#[test]
fn ham_deviate_csv_tracks_the_closed_form() {
    let f = fixture("example3.json");
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("series.csv");
    let out = symflow(&[
        "ham-deviate",
        f.to_str().unwrap(),
        "--u0",
        "q1=0,q2=0,p1=1,p2=0",
        "--t-span",
        "0:10",
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,G,G_dot,G_closed,energy");
    for line in lines {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        let (g, g_closed) = (cols[1], cols[3]);
        assert!((g - g_closed).abs() <= 1e-6, "row: {line}");
    }

    // The Toda file carries the derived invariant as an extra column; it
    // must stay constant along the flow.
    let f = fixture("example4.json");
    let out = symflow(&[
        "ham-deviate",
        f.to_str().unwrap(),
        "--u0",
        "q1=0,q2=0,p1=0.4,p2=0.2",
        "--t-span",
        "0:10",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,G,G_dot,invariant_I");
    let mut first = None;
    for line in lines {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        let inv = cols[3];
        let i0 = *first.get_or_insert(inv);
        assert!((inv - i0).abs() <= 1e-6, "row: {line}");
    }
}

#[test]
fn constant_check_with_drift_via_flags() {
    let f = fixture("example2.json");
    let out = symflow(&[
        "check",
        f.to_str().unwrap(),
        "--what",
        "constant",
        "--name",
        "kappa1",
        "--u0",
        "x=-1,y=0.5",
        "--t-span",
        "0:5",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["verdict"], "pass");
    assert!(v["drift"]["max_drift"].as_f64().unwrap() <= 1e-6);
    assert_eq!(v["pointwise"]["check"], "constant-pointwise");
}
