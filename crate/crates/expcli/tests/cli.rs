use std::fs;
use std::path::Path;
use std::process::Command;

use kmdflow::densities::{random_density, DensitySpec};
use kmdflow::TorusGrid1D;
use kmdflow_cli::SERIES_HEADER;
use serde_json::Value;

fn kmdflow(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_kmdflow")).args(args).output().unwrap()
}

fn run_ok(args: &[&str]) {
    let out = kmdflow(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let idx = lines.next().unwrap().split(',').position(|h| h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().to_string()).collect()
}

#[test]
fn identical_configs_give_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        run_ok(&[
            "--preset",
            "coulomb",
            "--cells",
            "128",
            "--tend",
            "4",
            "--seed",
            "7",
            "--out",
            out.to_str().unwrap(),
        ]);
    }
    for file in ["series.csv", "rates.json"] {
        assert_eq!(fs::read(a.join(file)).unwrap(), fs::read(b.join(file)).unwrap(), "{file}");
    }
    let other = dir.path().join("c");
    run_ok(&["--preset", "coulomb", "--cells", "128", "--tend", "4", "--seed", "8", "--out", other.to_str().unwrap()]);
    assert_ne!(fs::read(a.join("series.csv")).unwrap(), fs::read(other.join("series.csv")).unwrap());
}

#[test]
fn series_csv_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    run_ok(&[
        "--preset",
        "custom",
        "--s",
        "1",
        "--cells",
        "64",
        "--tend",
        "2",
        "--set",
        "sublevel_a=0.3",
        "--out",
        out.to_str().unwrap(),
    ]);
    let csv = fs::read_to_string(out.join("series.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), SERIES_HEADER);
    assert_eq!(csv.lines().count(), 402);
    for line in csv.lines().skip(1) {
        assert_eq!(line.split(',').count(), 11);
    }
    // w2 and hgamma were not requested
    assert!(column(&csv, "w2").iter().all(String::is_empty));
    assert!(column(&csv, "hgamma").iter().all(String::is_empty));
    let sub: Vec<f64> = column(&csv, "sublevel_a").iter().map(|v| v.parse().unwrap()).collect();
    assert!(sub.iter().all(|v| (0.0..=1.0).contains(v)));
    for m in column(&csv, "mass") {
        assert!((m.parse::<f64>().unwrap() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn target_start_has_zero_energy() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    run_ok(&[
        "--preset",
        "custom",
        "--cells",
        "64",
        "--tend",
        "3",
        "--set",
        "init=target",
        "--out",
        out.to_str().unwrap(),
    ]);
    let csv = fs::read_to_string(out.join("series.csv")).unwrap();
    assert!(column(&csv, "energy").iter().all(|e| e.parse::<f64>().unwrap() == 0.0));
    let rates = json(&out.join("rates.json"));
    assert!(rates["fits"][0]["fit"].is_null());
}

#[test]
fn presets_record_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    run_ok(&["--preset", "coulomb", "--min-nu", "0.2", "--cells", "128", "--tend", "10", "--out", a.to_str().unwrap()]);
    let rates = json(&a.join("rates.json"));
    assert_eq!(rates["fits"][0]["quantity"], "hminus_s");
    assert_eq!(rates["fits"][0]["predicted"], 0.2);
    assert_eq!(rates["fits"][0]["fit"]["kind"], "exponential");

    let b = dir.path().join("b");
    run_ok(&[
        "--preset",
        "riesz_s",
        "--s",
        "2",
        "--gamma0",
        "2",
        "--gamma-nu",
        "2",
        "--cells",
        "128",
        "--tend",
        "100",
        "--out",
        b.to_str().unwrap(),
    ]);
    let rates = json(&b.join("rates.json"));
    assert_eq!(rates["fits"][0]["predicted"], 1.0);
    assert_eq!(rates["fits"][0]["fit"]["kind"], "power_law");

    let c = dir.path().join("c");
    run_ok(&[
        "--preset",
        "relu",
        "--gamma-nu",
        "3",
        "--particles",
        "50",
        "--tend",
        "5",
        "--mode",
        "WFR",
        "--out",
        c.to_str().unwrap(),
    ]);
    let rates = json(&c.join("rates.json"));
    assert_eq!(rates["fits"][0]["quantity"], "energy");
    assert_eq!(rates["fits"][0]["predicted"], 4.0);
    let manifest = json(&c.join("manifest.json"));
    assert_eq!(manifest["status"], "ok");
    assert_eq!(manifest["config"]["mode"], "WFR");
    assert_eq!(manifest["config"]["sample_interval"], 5.0 / 400.0);
}

#[test]
fn snapshot_at_zero_is_the_initial_density() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    run_ok(&[
        "--preset",
        "coulomb",
        "--cells",
        "64",
        "--tend",
        "2",
        "--seed",
        "3",
        "--set",
        "snapshots=0,1,2",
        "--out",
        out.to_str().unwrap(),
    ]);
    let csv = fs::read_to_string(out.join("snapshots.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "x,t=0e0,t=1e0,t=2e0");
    let grid = TorusGrid1D::new(64).unwrap();
    let mu0 = random_density(&DensitySpec::new(1.0, 0.2, 16, 6), grid).unwrap();
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 64);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row.len(), 4);
        assert_eq!(row[0], grid.center(i));
        assert_eq!(row[1], mu0.values()[i]);
    }
}

#[test]
fn config_files_and_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let kv = dir.path().join("run.conf");
    fs::write(&kv, "preset = riesz_s\ns = 3\ngamma0 = 1\ncells = 64\ntend = 20\n").unwrap();
    let out = dir.path().join("kv");
    run_ok(&["--config", kv.to_str().unwrap(), "--seed", "5", "--out", out.to_str().unwrap()]);
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["config"]["s"], 3.0);
    assert_eq!(m["config"]["seed"], 5);
    assert_eq!(m["config"]["gamma_nu"], 4.0);

    let js = dir.path().join("run.json");
    fs::write(&js, r#"{"preset": "coulomb", "n_cells": 64, "t_end": 2.0, "w2": false}"#).unwrap();
    let out = dir.path().join("js");
    run_ok(&["--config", js.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let csv = fs::read_to_string(out.join("series.csv")).unwrap();
    assert!(column(&csv, "w2").iter().all(String::is_empty));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let out = out.to_str().unwrap();
    for args in [
        vec!["--preset", "coulomb", "--s", "2", "--out", out],
        vec!["--preset", "nonsense", "--out", out],
        vec!["--mode", "X", "--out", out],
        vec!["--set", "unknown=1", "--out", out],
        vec!["--min-nu", "1.5", "--out", out],
        vec!["--cells", "many", "--out", out],
    ] {
        assert_eq!(kmdflow(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn sweep_writes_one_directory_per_line() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = dir.path().join("sweep.txt");
    fs::write(&sweep, "seed=1\nseed=2 s=2\n# comment\npreset=relu n_particles=40 t_end=2\n").unwrap();
    let out = dir.path().join("sweep");
    run_ok(&[
        "--cells",
        "64",
        "--tend",
        "2",
        "--sweep",
        sweep.to_str().unwrap(),
        "--jobs",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    for i in 0..3 {
        let m = json(&out.join(format!("run_{i}")).join("manifest.json"));
        assert_eq!(m["status"], "ok");
    }
    assert_eq!(json(&out.join("run_1/manifest.json"))["config"]["s"], 2.0);
    assert_eq!(json(&out.join("run_2/manifest.json"))["config"]["preset"], "relu");

    fs::write(&sweep, "seed=1\ns=0.5\n").unwrap();
    assert_eq!(kmdflow(&["--sweep", sweep.to_str().unwrap(), "--out", out.to_str().unwrap()]).status.code(), Some(2));
}
