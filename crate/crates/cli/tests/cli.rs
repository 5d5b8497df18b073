use std::path::Path;
use std::process::{Command, Output};

use spotvol::estimators::{estimate_all_blocks, estimate_fixed_k, BlockSpec};
use spotvol::harness::ExperimentConfig;
use spotvol::inference::{ci_fixed_k, BoundMethod, TableCache};
use spotvol::path::{simulate_path_replicate, ModelConfig};

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures");

fn spotvol(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spotvol"))
        .args(args)
        .env_remove("SPOTVOL_CACHE_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn fixture(name: &str) -> String {
    format!("{FIXTURES}/{name}")
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let idx = lines.next().unwrap().split(',').position(|h| h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

#[test]
fn help_for_every_subcommand() {
    for sub in ["simulate", "estimate", "beta", "ci", "histogram", "coverage", "quantile-cache"] {
        let o = spotvol(&[sub, "--help"]);
        assert!(o.status.success(), "{sub}");
        assert!(stdout(&o).contains("Usage"), "{sub}");
    }
}

#[test]
fn missing_flag_is_a_usage_error() {
    let o = spotvol(&["ci", "--input", &fixture("returns.csv"), "--k", "15"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert_eq!(err.trim_end().lines().count(), 1);
    let v: serde_json::Value = serde_json::from_str(err.trim()).unwrap();
    assert_eq!(v["code"], "usage");
    assert!(v["message"].as_str().unwrap().contains("Usage: spotvol ci"));
}

#[test]
fn regime_error_exits_one() {
    let o = spotvol(&["ci", "--input", &fixture("returns.csv"), "--method", "large-k-gauss", "--k", "30", "--beta", "1.6"]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(String::from_utf8(o.stderr).unwrap().trim()).unwrap();
    assert_eq!(v["code"], "regime");
}

#[test]
fn ci_matches_golden_file() {
    let o = spotvol(&[
        "ci", "--input", &fixture("returns.csv"), "--method", "fixed-k", "--k", "15", "--p", "1", "--beta", "1.6",
        "--alpha", "0.1", "--table-size", "20000", "--seed", "7",
    ]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), std::fs::read_to_string(fixture("ci_fixed_k.csv")).unwrap());
}

#[test]
fn beta_matches_golden_file() {
    let o = spotvol(&["beta", "--input", &fixture("returns.csv"), "--method", "second-diff-pv", "--p", "0.5"]);
    assert!(o.status.success());
    let got: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let want: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("beta_second_diff.json")).unwrap()).unwrap();
    assert_eq!(got, want);
    assert!(got["beta_hat"].is_f64() && got["diagnostics"].is_object());
}

/// `simulate` then `estimate`/`ci` reproduces the in-process pipeline bit for bit.
#[test]
fn simulate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert!(spotvol(&["simulate", "--output", out, "--seed", "31", "--replicate", "2"]).status.success());
    assert!(dir.path().join("run_manifest.json").exists());
    let returns = dir.path().join("path_returns.csv");
    let returns = returns.to_str().unwrap();

    let path = simulate_path_replicate(&ModelConfig::standard(1.6, 31), 2).unwrap();
    let direct = estimate_all_blocks(&path.returns, 15, |r, b| estimate_fixed_k(r, b, 1.0)).unwrap();

    let o = spotvol(&["estimate", "--input", returns, "--k", "15"]);
    assert!(o.status.success());
    let got = column(&stdout(&o), "estimate");
    assert_eq!(got.len(), direct.len());
    for (g, d) in got.iter().zip(&direct) {
        assert_eq!(g.to_bits(), d.value.to_bits());
    }

    let o = spotvol(&[
        "ci", "--input", returns, "--method", "fixed-k", "--k", "15", "--beta", "1.6", "--table-size", "20000", "--seed", "3",
    ]);
    assert!(o.status.success());
    let cache = TableCache::new(20_000, 3);
    let lo = column(&stdout(&o), "lo");
    for (j, l) in lo.iter().enumerate() {
        let est = estimate_fixed_k(&path.returns, BlockSpec::new(15, j + 1).unwrap(), 1.0).unwrap();
        let ci = ci_fixed_k(&est, 1.6, 0.1, BoundMethod::Hdi, &cache).unwrap();
        assert_eq!(l.to_bits(), ci.lo.to_bits());
    }
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn experiments_are_reproducible_and_echo_config() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::standard(5);
    cfg.replications = 200;
    cfg.k_list = vec![5, 10];
    cfg.reference_size = 5000;
    cfg.table_size = 20_000;
    let cfg_path = dir.path().join("cfg.json");
    std::fs::write(&cfg_path, serde_json::to_string(&cfg).unwrap()).unwrap();
    let run = |sub: &str, name: &str, threads: &str| {
        let out = dir.path().join(name);
        let o = spotvol(&[sub, "--config", cfg_path.to_str().unwrap(), "--output", out.to_str().unwrap(), "--threads", threads]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        read_dir_sorted(&out)
    };
    let a = run("histogram", "h1", "1");
    let b = run("histogram", "h2", "3");
    assert_eq!(a, b);
    let names: Vec<&str> = a.iter().map(|(n, _)| n.as_str()).collect();
    assert!(names.contains(&"ks_table.csv") && names.contains(&"histograms_0.6_5.csv"));
    let manifest: serde_json::Value =
        serde_json::from_slice(&a.iter().find(|(n, _)| n == "run_manifest.json").unwrap().1).unwrap();
    assert_eq!(manifest["config"]["replications"], 200);
    assert_eq!(manifest["config"]["alpha"], 0.1);
    assert_eq!(run("coverage", "c1", "1"), run("coverage", "c2", "2"));
}
