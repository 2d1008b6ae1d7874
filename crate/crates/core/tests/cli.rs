use std::path::Path;
use std::process::{Command, Output};

use mcflab::runner::{preset, CheckName};

fn mcflab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mcflab")).args(args).output().unwrap()
}

fn quick_config(dir: &Path) -> std::path::PathBuf {
    let mut cfg = preset("circle-shrinker-static").unwrap();
    cfg.t_end = 0.3;
    cfg.checks = vec![CheckName::MonotonicityCompact, CheckName::L2Control, CheckName::AlmostMonotoneJ];
    let p = dir.join("quick.toml");
    std::fs::write(&p, cfg.to_toml().unwrap()).unwrap();
    p
}

#[test]
fn list_presets() {
    let out = mcflab(&["list-presets"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert!(text.contains("cylinder-perturbed-forced"));
}

#[test]
fn run_then_verify() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = quick_config(tmp.path());
    let out_dir = tmp.path().join("out");
    let out = mcflab(&["run", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap(), "--g-rescaling", "paper"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = std::fs::read_to_string(out_dir.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"g_rescaling\": \"paper\""));
    let v = mcflab(&["verify-report", out_dir.to_str().unwrap()]);
    assert_eq!(v.status.code(), Some(0));
    assert_eq!(String::from_utf8(v.stdout).unwrap().matches("consistent").count(), 3);
    let one = mcflab(&["verify-report", out_dir.join("reports/l2_control.json").to_str().unwrap()]);
    assert_eq!(one.status.code(), Some(0));
}

#[test]
fn configuration_errors_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.toml");
    std::fs::write(&bad, "name = \"x\"\n").unwrap();
    assert_eq!(mcflab(&["run", "--config", bad.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(mcflab(&["run", "--preset", "torus"]).status.code(), Some(1));
    let cfg = quick_config(tmp.path());
    let text = std::fs::read_to_string(&cfg).unwrap().replace("dt = 0.001", "dt = 0.5");
    std::fs::write(&cfg, text).unwrap();
    let out = mcflab(&["run", "--config", cfg.to_str().unwrap(), "--out", tmp.path().join("o2").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stability bound"));
}

#[test]
fn sweep_writes_a_table() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = quick_config(tmp.path());
    let dir = tmp.path().join("sweep");
    let out = mcflab(&["sweep", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap(), "--param", "forcing.k=0,0.1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.starts_with("forcing.k,exit_code,"));
    let empty = mcflab(&["sweep", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap(), "--param", "forcing.k="]);
    assert_eq!(empty.status.code(), Some(1));
}
