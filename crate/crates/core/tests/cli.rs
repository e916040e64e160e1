use std::path::Path;
use std::process::{Command, Output};

fn csframes(args: &[&str], config: &str, out: &Path) -> Output {
    let cfg = out.join("experiment.cfg");
    std::fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_csframes"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(out)
        .env_remove("CSFRAMES_OUT")
        .output()
        .unwrap()
}

#[test]
fn verify_passes_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[family]\nkind = gp\nkappa = 1\n[truncation]\nn_max = 40\n[task]\nname = verify\n";
    let out = csframes(&["verify"], cfg, dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report = std::fs::read_to_string(dir.path().join("verify.csv")).unwrap();
    assert!(report.starts_with("check,"));
    assert!(!report.contains(",fail,"));
}

#[test]
fn malformed_configuration_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = csframes(&["eval"], "[family]\nkind = gp\nkappa = -1\n[task]\nname = eval\nz = 0.1\n", dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn task_mismatch_is_a_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[family]\nkind = canonical\n[task]\nname = eval\nz = 0.1\n";
    let out = csframes(&["scan"], cfg, dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failing_check_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[family]\nkind = q_osc\nq = 1.5\n[truncation]\nn_max = 64\n[task]\nname = verify\n";
    let out = csframes(&["verify"], cfg, dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn eval_reports_overlap() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[family]\nkind = canonical\n[truncation]\nn_max = 40\n[task]\nname = eval\nz = 0.3-0.2i\n";
    let out = csframes(&["eval"], cfg, dir.path());
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("eval.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    let re: f64 = row[6].parse().unwrap();
    assert!((re - 1.0).abs() < 1e-12, "{csv}");
}
