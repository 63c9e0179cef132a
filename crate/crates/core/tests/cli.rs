use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cee-interp"))
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn run(args: &[&str]) -> i32 {
    bin().args(args).output().unwrap().status.code().unwrap()
}

fn read(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn solve_writes_solution_trace_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sol.json");
    let trace = dir.path().join("trace.csv");
    let input = data("degree7.json");
    let args = ["solve", "--input", input.to_str().unwrap(), "--output", out.to_str().unwrap(), "--trace", trace.to_str().unwrap()];
    assert_eq!(run(&args), 0);
    let first = std::fs::read(&out).unwrap();
    let first_trace = std::fs::read(&trace).unwrap();
    assert_eq!(run(&args), 0);
    assert_eq!(first, std::fs::read(&out).unwrap());
    assert_eq!(first_trace, std::fs::read(&trace).unwrap());

    let report = read(&out);
    assert!(report["interpolation_residual"].as_f64().unwrap() < 1e-6);
    assert_eq!(report["solution"]["a"].as_array().unwrap().len(), 8);
    let header = String::from_utf8(first_trace).unwrap();
    assert!(header.starts_with("lambda,p_1,"));
}

#[test]
fn trivial_problem_has_zero_state_and_flat_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sol.json");
    let csv = dir.path().join("phi.csv");
    assert_eq!(run(&["solve", "--input", data("trivial.json").to_str().unwrap(), "--output", out.to_str().unwrap()]), 0);
    let report = read(&out);
    let p: Vec<f64> = report["solution"]["p"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert!(p.iter().all(|x| x.abs() < 1e-12), "{p:?}");

    assert_eq!(run(&["spectrum", "--input", out.to_str().unwrap(), "--output", csv.to_str().unwrap(), "--grid", "64"]), 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 64);
    for row in rows {
        let phi: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
        assert!((phi - 1.0).abs() < 1e-12, "{row}");
    }
}

#[test]
fn infeasible_data_exits_three_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("err.json");
    assert_eq!(run(&["solve", "--input", data("infeasible.json").to_str().unwrap(), "--output", out.to_str().unwrap()]), 3);
    let report = read(&out);
    assert_eq!(report["error"]["kind"], "pick_infeasible");
    assert!(report["error"]["min_eigenvalue"].as_f64().unwrap() < 0.0);
}

#[test]
fn malformed_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.json");
    std::fs::write(&input, "{\"nodes\": [\"inf\", 2.0], \"values\": [[0.5]]").unwrap();
    let out = dir.path().join("out.json");
    assert_eq!(run(&["solve", "--input", input.to_str().unwrap(), "--output", out.to_str().unwrap()]), 2);
    std::fs::write(&input, "{\"nodes\": [\"inf\", 0.5], \"values\": [[0.5], [0.5]]}").unwrap();
    assert_eq!(run(&["solve", "--input", input.to_str().unwrap(), "--output", out.to_str().unwrap()]), 2);
    assert_eq!(run(&["solve", "--input", input.to_str().unwrap(), "--output", input.to_str().unwrap()]), 2);
}

#[test]
fn zero_series_exits_six() {
    let dir = tempfile::tempdir().unwrap();
    let series = dir.path().join("y.txt");
    std::fs::write(&series, "0\n".repeat(20_000)).unwrap();
    let out = dir.path().join("id.json");
    assert_eq!(run(&["identify", "--input", series.to_str().unwrap(), "--output", out.to_str().unwrap()]), 6);
    assert_eq!(read(&out)["error"]["exit_code"], 6);
}

#[test]
fn design_reports_metrics_and_honours_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("design.json");
    assert_eq!(run(&["design", "--input", data("design.json").to_str().unwrap(), "--output", out.to_str().unwrap(), "--grid", "500"]), 0);
    let report = read(&out);
    assert_eq!(report["internally_stable"], true);
    assert!(report["hinf_norm"].as_f64().unwrap() < 1.8);
    let freq = std::fs::read_to_string(dir.path().join("design.freq.csv")).unwrap();
    assert_eq!(freq.lines().count(), 501);
}

#[test]
fn gamma_too_small_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let mut file: Value = read(&data("design.json"));
    file["gamma"] = 1.0.into();
    let input = dir.path().join("design.json");
    std::fs::write(&input, file.to_string()).unwrap();
    let out = dir.path().join("out.json");
    assert_eq!(run(&["design", "--input", input.to_str().unwrap(), "--output", out.to_str().unwrap()]), 3);
}

#[test]
fn identify_from_analytic_covariance() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("id.json");
    assert_eq!(run(&["identify", "--analytic-covariance", "--output", out.to_str().unwrap(), "--grid", "128"]), 0);
    let report = read(&out);
    assert_eq!(report["rank"], 4);
    let csv = std::fs::read_to_string(dir.path().join("id.spectrum.csv")).unwrap();
    assert_eq!(csv.lines().count(), 129);
}
