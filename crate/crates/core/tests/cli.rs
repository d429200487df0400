use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_driver-select"))
        .args(args)
        .env("RUST_LOG", "off")
        .output()
        .expect("spawn binary")
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().expect("exit code")
}

const SMALL: [&str; 8] = ["--n", "10", "--p", "3", "--m", "2", "--seed", "4"];

fn with<'a>(verb: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec![verb];
    v.extend(SMALL);
    v.extend(extra);
    v
}

#[test]
fn select_prints_json() {
    let out = run(&with("select", &["--method", "greedy"]));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["m"], 2);
    assert_eq!(doc["t_f"], 1.0);
    assert!(doc["nu"].as_f64().unwrap() > 0.0);
}

#[test]
fn infinite_horizon_is_accepted() {
    assert_eq!(code(&with("select", &["--method", "flp", "--tf", "inf"])), 0);
}

#[test]
fn config_errors_exit_2() {
    assert_eq!(code(&with("select", &["--method", "hill"])), 2);
    assert_eq!(code(&with("select", &["--method", "lpgm", "--tf", "inf"])), 2);
    assert_eq!(code(&with("select", &["--method", "simplex"])), 2);
    assert_eq!(code(&["select", "--n", "10", "--p", "11", "--m", "2"]), 2);
    assert_eq!(code(&["check-ilp-size", "--n", "3", "--p", "4"]), 2);
    assert_eq!(code(&["frobnicate"]), 2);
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(code(&with("compare", &["--realizations", "2", "--format", "xml", "--out", out])), 2);
}

#[test]
fn unstable_infinite_horizon_exits_3() {
    assert_eq!(code(&with("select", &["--nu", "0.1", "--tf", "inf"])), 3);
}

#[test]
fn check_ilp_size_prints_count() {
    let out = run(&["check-ilp-size", "--n", "5", "--p", "2"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "35");
}

#[test]
fn generate_writes_an_edge_list() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.txt");
    let args = ["generate", "--family", "k-regular", "--kav", "2", "--n", "8", "--out", path.to_str().unwrap()];
    assert_eq!(code(&args), 0);
    let g = driver_select::graph::read_edge_list(&path).unwrap();
    assert_eq!(g.n(), 8);
}

fn compare_into(dir: &Path, extra: &[&str]) {
    let mut args = with("compare", &["--realizations", "3", "--format", "csv", "--out", dir.to_str().unwrap()]);
    args.extend(extra);
    let out = run(&args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn manifest_rerun_reproduces_csv() {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    compare_into(first.path(), &[]);
    let manifest = first.path().join("manifest.json");
    compare_into(second.path(), &["--manifest", manifest.to_str().unwrap()]);
    let a = fs::read(first.path().join("headtohead.csv")).unwrap();
    let b = fs::read(second.path().join("headtohead.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn correlate_writes_requested_formats() {
    let dir = tempfile::tempdir().unwrap();
    let args = with(
        "correlate",
        &["--realizations", "1", "--grid-points", "3", "--format", "csv,svg", "--out", dir.path().to_str().unwrap()],
    );
    assert_eq!(code(&args), 0);
    for f in ["correlation.csv", "correlation_vol.svg", "correlation_energy.svg", "manifest.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    assert!(!dir.path().join("correlation.json").exists());
}
