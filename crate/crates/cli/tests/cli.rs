use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_seqbound");
const CONFIGS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/configs");
const TOY_CORPUS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/toy_corpus.txt");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().expect("exit code")
}

fn out_arg(dir: &Path) -> &str {
    dir.to_str().unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

#[test]
fn usage_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = out_arg(tmp.path());
    assert_eq!(code(&["simulate", "--samples", "0", "--out", out]), 2);
    assert_eq!(code(&["simulate", "--x-size", "3", "--c-size", "3", "--out", out]), 2);
    assert_eq!(code(&["simulate", "--pinv-l1-cap", "-1", "--out", out]), 2);
    assert_eq!(code(&["simulate"]), 2);
    assert_eq!(code(&["counterexample", "--condition", "bogus", "--out", out]), 2);
    assert_eq!(code(&["check-rank", "--corpus", TOY_CORPUS, "--seq-len", "8", "--policy", "keep", "--out", out]), 2);
    assert_eq!(code(&["frobnicate"]), 2);
    assert_eq!(code(&["--help"]), 0);
    // nothing is written on a usage error
    assert_eq!(fs::read_dir(tmp.path()).unwrap().count(), 0);
}

#[test]
fn simulate_small_run() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["simulate", "--samples", "25", "--seed", "3", "--out", out_arg(tmp.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(tmp.path().join("bounds.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("seed,x_size,c_size,seq_len,sigma_min,pinv_l1,l1_marginal,d_bar,delta_bar,theorem1_rhs,kl,beta,chain_ok")
    );
    assert_eq!(lines.clone().count(), 25);
    assert!(lines.all(|l| l.ends_with(",1")));
    let manifest = json(&tmp.path().join("manifest.json"));
    assert_eq!(manifest["subcommand"], "simulate");
    assert_eq!(manifest["master_seed"], 3);
    assert_eq!(manifest["config"]["samples"], 25);
    assert!(!tmp.path().join("violation.json").exists());
}

#[test]
fn counterexample_failures_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    // a full-rank P_C needs at least as many positions as labels
    let args = ["counterexample", "--condition", "structure", "--c-size", "3", "--seq-len", "2"];
    let out = run(&[&args[..], &["--out", out_arg(tmp.path())]].concat());
    assert_eq!(out.status.code(), Some(1));
    assert!(!tmp.path().join("counterexample.json").exists());
}

#[test]
fn counterexample_certificate_shape() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&["counterexample", "--condition", "structure", "--seed", "1", "--out", out_arg(tmp.path())]), 0);
    let w = json(&tmp.path().join("counterexample.json"));
    for key in ["alphabet", "prior", "cond", "model_cond", "certificate"] {
        assert!(w.get(key).is_some(), "{key}");
    }
    let cert = &w["certificate"];
    assert_eq!(cert["violated_condition"], "StructureBroken");
    assert_eq!(cert["full_rank"], true);
    assert!(cert["l1_marginal"].as_f64().unwrap() <= 1e-9);
    assert!(cert["delta_bar"].as_f64().unwrap() > 0.01);
    assert!(cert["sigma_min"].as_f64().unwrap() > 0.0);
}

#[test]
fn check_rank_errors_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty.txt");
    fs::write(&empty, "").unwrap();
    let out = tmp.path().join("out");
    assert_eq!(code(&["check-rank", "--corpus", out_arg(&empty), "--seq-len", "3", "--out", out_arg(&out)]), 1);
    let missing = tmp.path().join("missing.txt");
    assert_eq!(code(&["check-rank", "--corpus", out_arg(&missing), "--seq-len", "3", "--out", out_arg(&out)]), 1);
    let cap = ["--vocab-cap", "2"];
    let args = ["check-rank", "--corpus", TOY_CORPUS, "--seq-len", "8", "--out", out_arg(&out)];
    assert_eq!(code(&[&args[..], &cap[..]].concat()), 1);
}

#[test]
fn check_rank_report_fields() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["check-rank", "--corpus", TOY_CORPUS, "--seq-len", "8", "--policy", "discard", "--out"];
    assert_eq!(code(&[&args[..], &[out_arg(tmp.path())]].concat()), 0);
    let r = json(&tmp.path().join("corpus_report.json"));
    assert_eq!(r["policy"], "discard");
    assert_eq!(r["seq_len"], 8);
    assert_eq!(r["vocab_size"], 6);
    assert!(r["sigma_min"].as_f64().unwrap() > 0.0);
    let curve = r["growth_curve"].as_array().unwrap();
    assert_eq!(curve.len(), 4);
    assert_eq!(curve[3][1], r["sigma_min"]);
}

#[test]
fn train_from_optimum_is_flat() {
    let tmp = tempfile::tempdir().unwrap();
    let config = format!("{CONFIGS}/train_at_optimum.json");
    assert_eq!(code(&["train", "--config", &config, "--out", out_arg(tmp.path())]), 0);
    let mut reader = csv::Reader::from_path(tmp.path().join("trajectory.csv")).unwrap();
    let losses: Vec<f64> = reader.records().map(|r| r.unwrap()[1].parse().unwrap()).collect();
    assert!(!losses.is_empty());
    assert!(losses.iter().all(|l| (l - losses[0]).abs() < 1e-8));
    let report = json(&tmp.path().join("report.json"));
    assert_eq!(report["delta_bar"], 0.0);
    // population training writes no dataset file
    assert!(!tmp.path().join("dataset.txt").exists());
    let manifest = json(&tmp.path().join("manifest.json"));
    assert_eq!(manifest["config"]["dataset"]["kind"], "population");
}

#[test]
fn train_rejects_bad_configs() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    fs::write(&bad, r#"{"ground_truth": {}}"#).unwrap();
    let out = tmp.path().join("out");
    assert_eq!(code(&["train", "--config", out_arg(&bad), "--out", out_arg(&out)]), 1);
    assert_eq!(code(&["train", "--config", "/nonexistent.json", "--out", out_arg(&out)]), 1);
}

#[test]
fn report_single_instance() {
    let tmp = tempfile::tempdir().unwrap();
    let instance = format!("{CONFIGS}/report_instance.json");
    assert_eq!(code(&["report", "--instance", &instance, "--out", out_arg(tmp.path())]), 0);
    let r = json(&tmp.path().join("report.json"));
    let report = &r["report"];
    assert_eq!(report["theorem_applies"], true);
    let (delta, d) = (report["delta_bar"].as_f64().unwrap(), report["d_bar"].as_f64().unwrap());
    assert!(delta <= d && d <= report["theorem1_rhs"].as_f64().unwrap());
    assert_eq!(r["mismatch"]["local"].as_array().unwrap().len(), 2);
}
