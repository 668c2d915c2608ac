use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn dsg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dsg")).args(args).output().expect("binary runs")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

#[test]
fn simulate_example_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("example1.cfg");
    let out = dsg(&["simulate", cfg.to_str().unwrap(), "--runs", "10", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    for f in ["mse.csv", "mse.svg", "summary.txt", "config.txt", "trajectory_run0.csv", "trajectory_run0.meta"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
    let mse = std::fs::read_to_string(dir.path().join("mse.csv")).unwrap();
    assert_eq!(mse.lines().count(), 601);
    assert!(text(&out.stdout).contains("10 runs x 600 steps"));
}

#[test]
fn diagnose_reads_a_written_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("example1.cfg");
    let d = dir.path().to_str().unwrap();
    let sim = dsg(&["simulate", cfg.to_str().unwrap(), "--runs", "1", "--steps", "300", "--out", d]);
    assert!(sim.status.success(), "{}", text(&sim.stderr));
    let traj = dir.path().join("trajectory_run0.csv");
    let diag_dir = dir.path().join("diag");
    let out = dsg(&["diagnose", traj.to_str().unwrap(), "--out", diag_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("rate fit: d1_hat"), "{stdout}");
    for f in ["excitation.csv", "noise.csv", "diagnose.txt"] {
        assert!(diag_dir.join(f).exists(), "{f} missing");
    }
    let wrong = dsg(&["diagnose", traj.to_str().unwrap(), "--theta", "1,2"]);
    assert_eq!(wrong.status.code(), Some(1), "{}", text(&wrong.stderr));
}

#[test]
fn lemma_check_passes_on_small_config() {
    let cfg = configs().join("small.cfg");
    let out = dsg(&["lemma-check", cfg.to_str().unwrap(), "--instances", "30"]);
    assert_eq!(out.status.code(), Some(0), "{}{}", text(&out.stdout), text(&out.stderr));
    let stdout = text(&out.stdout);
    assert!(stdout.lines().filter(|l| l.starts_with("PASS")).count() >= 5, "{stdout}");
}

#[test]
fn step_sizes_outside_the_admissible_region_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let body = std::fs::read_to_string(configs().join("small.cfg")).unwrap().replace("mu = 0.2", "mu = 0.5");
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, body).unwrap();
    std::fs::copy(configs().join("path3.edges"), dir.path().join("path3.edges")).unwrap();
    let out = dsg(&["lemma-check", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("mu*(1+4*nu) <= 1"), "{}", text(&out.stderr));
}

#[test]
fn graph_reports_path_spectrum() {
    let out = dsg(&["graph", configs().join("path3.edges").to_str().unwrap()]);
    assert!(out.status.success());
    let stdout = text(&out.stdout);
    assert!(stdout.contains("diameter: 2"), "{stdout}");
    let line = stdout.lines().find(|l| l.starts_with("laplacian eigenvalues:")).unwrap();
    let values: Vec<f64> = line.split(':').nth(1).unwrap().split_whitespace().map(|v| v.parse().unwrap()).collect();
    for (got, want) in values.iter().zip([0.0, 1.0 / 3.0, 1.0]) {
        assert!((got - want).abs() < 1e-9, "{values:?}");
    }
}

#[test]
fn usage_errors_and_help() {
    assert_eq!(dsg(&["--bogus"]).status.code(), Some(1));
    assert_eq!(dsg(&["simulate"]).status.code(), Some(1));
    assert_eq!(dsg(&["--help"]).status.code(), Some(0));
    let missing = dsg(&["graph", "/nonexistent/edges.txt"]);
    assert_eq!(missing.status.code(), Some(2));
}
