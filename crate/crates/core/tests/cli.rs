use std::process::Command;

use gyration::cli::run;
use gyration::reldb::{CASES_RDB, TODA_RDB};
use serde_json::Value;

/// Runs the CLI in-process; returns (exit code, stdout, stderr).
fn cli(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("gyration").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json(args: &[&str]) -> Value {
    let mut v = vec!["--json"];
    v.extend_from_slice(args);
    let (code, out, err) = cli(&v);
    assert_eq!(code, 0, "{err}");
    serde_json::from_str(&out).unwrap()
}

#[test]
fn classify_reports_stability() {
    let (code, out, _) = cli(&["classify", "--plane", "HP2", "--k", "4"]);
    assert_eq!(code, 0);
    assert!(out.contains("GSII = 1 (all assignments)"), "{out}");
    let (code, out, _) = cli(&["classify", "--plane", "OP2", "--k", "3"]);
    assert_eq!(code, 0);
    assert!(out.contains("count 1 (trivial twist group)"), "{out}");
}

#[test]
fn classify_with_a_pinned_parameter() {
    let v = json(&["classify", "--plane", "OP2", "--k", "4", "--param", "xi=5"]);
    let records = v["records"].as_array().unwrap();
    assert_eq!(records.len(), 1);
    assert_eq!(records[0]["assignment"]["xi"], 5);
    assert_eq!(records[0]["count"], 3);
    let (code, _, err) = cli(&["classify", "--plane", "OP2", "--k", "4", "--param", "xi=2"]);
    assert_eq!(code, 1);
    assert!(err.contains("xi"), "{err}");
}

#[test]
fn table_lists_every_row() {
    let (code, out, _) = cli(&["table"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert!(lines[1].starts_with("CP2") && lines[1].contains("yes"));
    assert!(lines[2].starts_with("HP2") && lines[2].contains(" no "));
    assert!(lines.last().unwrap().starts_with("S^n"));
    let rows = json(&["table"]);
    assert_eq!(rows.as_array().unwrap().len(), 9 + 10 + 1);
}

#[test]
fn normalize_prints_the_group_context() {
    let (code, out, _) = cli(&["normalize", "eta(4).nu(5)"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("Snu'(4).eta(7)\n"), "{out}");
    assert!(out.contains("in pi(8 -> 4)"), "{out}");
    assert!(out.contains("coordinates (0, 1)"), "{out}");

    let v = json(&["normalize", "Ssigma'(8).nuh(15)", "--param", "xi=3"]);
    assert_eq!(v[0]["coords"], serde_json::json!([0, 3, 0, 0, 0]));
    let used = v[0]["relations_used"].as_array().unwrap();
    assert_eq!(used.len(), 1);

    let v = json(&["normalize", "eta(8).sigma(9)", "--param", "mu_es=nubar(8)"]);
    assert_eq!(v[0]["canonical"], "nubar(8)");
}

#[test]
fn normalize_failures_exit_with_1() {
    let (code, _, err) = cli(&["normalize", "eta(5)"]);
    assert_eq!(code, 1);
    assert!(err.starts_with("error:"), "{err}");
    let (code, _, err) = cli(&["normalize", "eta(4).nu(6)"]);
    assert_eq!(code, 1);
    assert!(err.contains("S^"), "{err}");
}

#[test]
fn solve_reports_witnesses() {
    let (code, out, _) = cli(&["solve", "--plane", "HP2", "--k", "4", "--tau", "(0,0)", "--omega", "nuh(7)"]);
    assert_eq!(code, 0);
    assert!(out.contains("[s4=1] equivalent: lambda = 3*nu(4)"), "{out}");
    let v = json(&["solve", "--plane", "HP2", "--k", "2", "--tau", "eta(7)", "--omega", "0"]);
    assert_eq!(v[0]["equivalent"], false);
    assert!(v[0]["witness"].is_null());
    let (code, _, err) = cli(&["solve", "--plane", "HP2", "--k", "2", "--tau", "(1,1)", "--omega", "(0)"]);
    assert_eq!(code, 1, "{err}");
}

#[test]
fn explain_shows_the_search() {
    let (code, out, _) = cli(&["explain", "--plane", "HP2", "--k", "2", "--tau", "(1)", "--omega", "(0)"]);
    assert_eq!(code, 0);
    assert!(out.contains("no witness; search space {0, eta(4)} x {+1, -1} exhausted"), "{out}");
    let (_, out, _) = cli(&["explain", "--plane", "HP2", "--k", "4", "--tau", "(0,0)", "--omega", "(1,0)", "--param", "s4=1"]);
    assert!(out.contains("witness lambda = 3*nu(4)"), "{out}");
    assert!(out.contains("relations used:"), "{out}");
}

#[test]
fn verify_db_on_shipped_and_broken_data() {
    let (code, out, _) = cli(&["verify-db"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("ok:"), "{out}");

    let dir = std::env::temp_dir().join(format!("gyration-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(dir.join("toda.rdb"), TODA_RDB.replace("Z/8<nuh(7)>", "Z/4<nuh(7)>")).unwrap();
    std::fs::write(dir.join("cases.rdb"), CASES_RDB).unwrap();
    let path = dir.to_str().unwrap();
    let (code, out, _) = cli(&["--db", path, "verify-db"]);
    assert_eq!(code, 1);
    assert!(out.contains("family_order"), "{out}");
    let (code, out, _) = cli(&["--db", path, "--json", "verify-db"]);
    assert_eq!(code, 1);
    for line in out.lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        assert!(v["kind"].is_string());
    }
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn usage_errors_exit_with_2() {
    assert_eq!(cli(&["classify", "--plane", "XP2", "--k", "2"]).0, 2);
    assert_eq!(cli(&["frobnicate"]).0, 2);
    assert_eq!(cli(&[]).0, 2);
    let (code, out, _) = cli(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("verify-db"));
}

#[test]
fn out_of_range_k_is_a_domain_error() {
    let (code, _, err) = cli(&["classify", "--plane", "CP2", "--k", "5"]);
    assert_eq!(code, 1);
    assert!(err.contains("outside the range"), "{err}");
}

#[test]
fn binary_honours_the_database_variable() {
    let exe = env!("CARGO_BIN_EXE_gyration");
    let out = Command::new(exe).args(["classify", "--plane", "CP2", "--k", "2"]).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("GSII = 1"));
    let out = Command::new(exe)
        .env("GYRATION_DB", "/nonexistent/gyration-data")
        .arg("table")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gyration-data"));
}
