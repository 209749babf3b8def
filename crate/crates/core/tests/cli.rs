use std::path::Path;
use std::process::{Command, Output};

use bellman_core::suite::RunReport;

fn bellman(args: &[&str], workers: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bellman"))
        .args(args)
        .env("BELLMAN_WORKERS", workers)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const SMALL: &str = "\
experiment = cli
[scenario orthant]
kind = verify
check = orthant
p = 0.5

[scenario region]
kind = region
check = hyper
p = 0.5
grid = 6
tol = 0
";

#[test]
fn passing_suite_exits_zero_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.conf", SMALL);
    let out = dir.path().join("out");
    let o = bellman(&["report", "--config", &cfg, "--out", out.to_str().unwrap()], "2");
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = RunReport::from_json(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!(report.passed());
    assert_eq!(report.metadata.workers, 2);
    let csv = std::fs::read_to_string(out.join("region-region.csv")).unwrap();
    assert!(csv.starts_with("a,b,p,admissible\n"), "{csv}");
}

#[test]
fn report_without_out_prints_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.conf", SMALL);
    let o = bellman(&["report", "--config", &cfg], "1");
    assert_eq!(o.status.code(), Some(0));
    let report = RunReport::from_json(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert_eq!(report.scenarios.len(), 2);
}

#[test]
fn unmet_expectation_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.conf", &format!("{SMALL}expect = fail\n"));
    let o = bellman(&["region", "--config", &cfg], "1");
    assert_eq!(o.status.code(), Some(1));
    // The subcommand filter drops the verify scenario.
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(!text.contains("orthant") && text.contains("region"), "{text}");
}

#[test]
fn config_errors_exit_two_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "typo.conf", "[scenario x]\nkind = verify\ncheck = orthant\np = 0.5\nq = 0.5\n");
    let o = bellman(&["verify", "--config", &cfg], "1");
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("line 5, column 1"), "{err}");
}

#[test]
fn general_rank_filter_runs_block_scenarios() {
    let o = bellman(&["check-pde", "--general-rank", "--grid", "5"], "1");
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("gpde1-borell") && !text.contains("borell-saturation"), "{text}");
}
