use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn run(dir: &Path, args: &[&str], config: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hardywave"));
    cmd.args(args)
        .arg("--out")
        .arg(dir.join("out"))
        .arg("--workers")
        .arg("2");
    if let Some(text) = config {
        let path = dir.join("config.json");
        fs::write(&path, text).unwrap();
        cmd.arg("--config").arg(path);
    }
    cmd.output().unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join("out").join(name)).unwrap()
}

fn json(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&read(dir, name)).unwrap()
}

fn header(dir: &Path, name: &str) -> String {
    read(dir, name).lines().next().unwrap().to_string()
}

const SMALL_SOLVE: &str = r#"{
    "grid": {"dimension": 5, "r_max": 16, "nodes": 64},
    "time": {"t_max": 4, "time_nodes": 16},
    "audit": {"snapshots": [0, 2, 4]}
}"#;

#[test]
fn params_reports_derived_exponents() {
    let tmp = TempDir::new().unwrap();
    let out = run(
        tmp.path(),
        &["params"],
        Some(r#"{"grid": {"dimension": 5}, "model": {"q": 3, "b": 0}}"#),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = json(tmp.path(), "params.json");
    let r = &doc["report"];
    assert_eq!(r["p"], 3.0);
    assert_eq!(r["r0"], 5.0);
    assert!((r["s"].as_f64().unwrap() - 5.0 / 3.0).abs() < 1e-12);
    assert_eq!(r["d1d2_residual"], 0.0);
    assert_eq!(doc["passed"], true);
    // the JSON report is also printed
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("\"r0\": 5.0"));
}

#[test]
fn b_equal_to_two_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let out = run(tmp.path(), &["params"], Some(r#"{"model": {"q": 3, "b": 2}}"#));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("(0, 2)"));
    assert!(!tmp.path().join("out").exists(), "no work before validation");
}

#[test]
fn sub_threshold_exponent_is_an_audit_failure() {
    let tmp = TempDir::new().unwrap();
    let out = run(tmp.path(), &["params"], Some(r#"{"model": {"q": 2.1}}"#));
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("admissibility"));
}

#[test]
fn unknown_keys_and_bad_flags_exit_two() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(
        run(tmp.path(), &["params"], Some(r#"{"model": {"q": 3, "p": 3}}"#))
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(tmp.path(), &["params"], Some("{not json")).status.code(), Some(2));
    assert_eq!(
        run(tmp.path(), &["norms"], Some(r#"{"experiment": "solve"}"#))
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(tmp.path(), &["norms"], Some(r#"{"audit": {"h": 0.5}}"#))
            .status
            .code(),
        Some(2)
    );
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hardywave"));
    let out = cmd
        .args(["params", "--workers", "0", "--out"])
        .arg(tmp.path().join("w"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_over_admissible_q() {
    let tmp = TempDir::new().unwrap();
    let cfg = r#"{"grid": {"dimension": 5}, "model": {"b": 0}, "sweep": {"ranges": {"q": [2.8, 3.0, 3.2]}}}"#;
    let out = run(tmp.path(), &["sweep"], Some(cfg));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(tmp.path(), "sweep.csv");
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 4);
    let cols: Vec<&str> = lines[0].split(',').collect();
    let ok = cols.iter().position(|c| *c == "threshold_ok").unwrap();
    for (line, q) in lines[1..].iter().zip(["2.8", "3", "3.2"]) {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells[0], q);
        assert_eq!(cells[ok], "true");
    }
    assert!(!csv.contains('\r'));
}

#[test]
fn sweep_records_failed_points_and_continues() {
    let tmp = TempDir::new().unwrap();
    let cfg = r#"{"sweep": {"ranges": {"q": [2.1, 3.0], "b": [0, 0.5]}}}"#;
    let out = run(tmp.path(), &["sweep"], Some(cfg));
    assert_eq!(out.status.code(), Some(1));
    let csv = read(tmp.path(), "sweep.csv");
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    // b before q, values in declared order
    let points: Vec<String> = rows
        .iter()
        .map(|r| r.split(',').take(2).collect::<Vec<_>>().join(","))
        .collect();
    assert_eq!(points, ["0,2.1", "0,3", "0.5,2.1", "0.5,3"]);
    assert!(rows[0].contains("error") && rows[0].contains("admissibility"));
    assert!(rows[1].contains(",pass,"));
    assert!(rows[3].contains(",pass,"));
}

#[test]
fn empty_sweep_range_exits_two() {
    let tmp = TempDir::new().unwrap();
    let out = run(tmp.path(), &["sweep"], Some(r#"{"sweep": {"ranges": {"q": []}}}"#));
    assert_eq!(out.status.code(), Some(2));
    let out = run(
        tmp.path(),
        &["sweep"],
        Some(r#"{"sweep": {"ranges": {"colour": [1]}}}"#),
    );
    assert_eq!(out.status.code(), Some(2));
    let out = run(tmp.path(), &["sweep"], None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn norms_columns_and_indicator_rows() {
    let tmp = TempDir::new().unwrap();
    let cfg = r#"{
        "grid": {"dimension": 3, "r_max": 2, "nodes": 256},
        "audit": {
            "fields": [{"kind": "indicator", "radius": 1}, {"kind": "shell", "inner": 0.5, "outer": 1.5, "level": -2}],
            "indices": [[3, null], [3, 1], [1.5, 2]],
            "corpus_size": 10
        }
    }"#;
    let out = run(tmp.path(), &["norms"], Some(cfg));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(header(tmp.path(), "norms.csv"), "field_id,p,z,norm,closed_form,rel_err");
    let csv = read(tmp.path(), "norms.csv");
    assert_eq!(csv.lines().count(), 7);
    assert!(csv.lines().nth(1).unwrap().starts_with("0_indicator,3,inf,"));
}

#[test]
fn power_law_rows_fail_the_weak_norm_anchor() {
    let tmp = TempDir::new().unwrap();
    let cfg = r#"{"grid": {"dimension": 3, "r_max": 1, "nodes": 512},
                  "audit": {"fields": [{"kind": "power_law", "p": 3}], "corpus_size": 0}}"#;
    let out = run(tmp.path(), &["norms"], Some(cfg));
    assert_eq!(out.status.code(), Some(1));
    let doc = json(tmp.path(), "norms.json");
    let failures = doc["failures"].as_array().unwrap();
    assert_eq!(failures.len(), 1);
}

#[test]
fn estimate_columns() {
    let tmp = TempDir::new().unwrap();
    let cfg = r#"{"grid": {"dimension": 3, "r_max": 48, "nodes": 256},
                  "audit": {"mode": "lp_dual", "p": 4, "times": {"start": 4, "end": 16, "count": 5}}}"#;
    let out = run(tmp.path(), &["dispersive"], Some(cfg));
    assert!(out.status.code().unwrap() <= 1);
    assert_eq!(header(tmp.path(), "dispersive.csv"), "t,norm,bound,ratio");
    assert_eq!(read(tmp.path(), "dispersive.csv").lines().count(), 6);
    let doc = json(tmp.path(), "dispersive.json");
    assert!(doc["report"]["estimate"]["fitted_slope"].is_number());

    let cfg = r#"{"grid": {"dimension": 5, "r_max": 24, "nodes": 128},
                  "audit": {"horizon": 4, "profiles": ["bump"]}}"#;
    let out = run(tmp.path(), &["yamazaki"], Some(cfg));
    assert!(out.status.code().unwrap() <= 1);
    assert_eq!(header(tmp.path(), "yamazaki.csv"), "t,norm,bound,ratio");
}

#[test]
fn solve_writes_snapshots_and_diagnostics() {
    let tmp = TempDir::new().unwrap();
    let out = run(tmp.path(), &["solve"], Some(SMALL_SOLVE));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(header(tmp.path(), "solve.csv"), "t,r,u");
    assert_eq!(read(tmp.path(), "solve.csv").lines().count(), 1 + 3 * 64);
    let d = &json(tmp.path(), "solve.json")["report"]["diagnostics"];
    assert_eq!(d["converged"], true);
    assert!((d["linear_sup_norm"].as_f64().unwrap() - 0.1).abs() < 1e-12);
}

#[test]
fn scatter_and_stability_share_columns() {
    let tmp = TempDir::new().unwrap();
    let cfg = r#"{"grid": {"dimension": 5, "r_max": 16, "nodes": 64},
                  "time": {"t_max": 4, "time_nodes": 16},
                  "audit": {"fit_window": [1, 2], "snapshots": [0]}}"#;
    let out = run(tmp.path(), &["scatter"], Some(cfg));
    assert!(
        out.status.code().unwrap() <= 1,
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let cols = "t,defect_direct,defect_tail,weighted_linear,weighted_diff";
    assert_eq!(header(tmp.path(), "scatter.csv"), cols);
    assert_eq!(read(tmp.path(), "scatter.csv").lines().count(), 1 + 17);

    let cfg = r#"{"grid": {"dimension": 5, "r_max": 16, "nodes": 64},
                  "time": {"t_max": 4, "time_nodes": 16},
                  "audit": {"compare": "identical", "snapshots": [0]}}"#;
    let out = run(tmp.path(), &["stability"], Some(cfg));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(header(tmp.path(), "stability.csv"), cols);
    let doc = json(tmp.path(), "stability.json");
    assert_eq!(
        doc["report"]["stability"]["weighted_difference"]["verdict"],
        "Vanishing"
    );
}

#[test]
fn identical_runs_are_byte_identical() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let cfg = r#"{"grid": {"dimension": 5, "r_max": 2, "nodes": 128}, "audit": {"corpus_size": 20}}"#;
    for dir in [a.path(), b.path()] {
        run(dir, &["norms", "--seed", "9"], Some(cfg));
        run(dir, &["solve"], Some(SMALL_SOLVE));
    }
    for name in ["norms.csv", "norms.json", "solve.csv", "solve.json"] {
        assert_eq!(read(a.path(), name), read(b.path(), name), "{name}");
    }
    let c = TempDir::new().unwrap();
    run(c.path(), &["norms", "--seed", "10"], Some(cfg));
    assert_ne!(read(a.path(), "norms.json"), read(c.path(), "norms.json"));
}
