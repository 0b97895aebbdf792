use std::process::{Command, Output};

use serde_json::Value;

fn crlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crlab")).args(args).output().expect("spawn crlab")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("bad json ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn quotient_fails_local_sum_test() {
    let out = crlab(&["check", "--expr", "z1/w2", "--test", "sum", "--mode", "local", "--points", "40"]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    let words = r["data"]["results"][0]["word_max"].as_array().unwrap();
    assert!(words[0].as_f64().unwrap() < 1e-8, "first operator annihilates z1/w2");
    assert!((words[1].as_f64().unwrap() - 2.0).abs() < 1e-6, "{}", words[1]);
}

#[test]
fn quotient_passes_global_sum_test() {
    let out = crlab(&["check", "--expr", "z1/w2", "--test", "sum", "--mode", "global", "--points", "40"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["checks"][0]["verdict"], Value::Bool(true));
}

#[test]
fn nirenberg_constant_jet() {
    let out = crlab(&["nirenberg", "--jet", "1,0,0,0,0,0,0,0,0,0"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["data"]["polynomial"], "1");
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        &["check", "--expr", "z1 +* w2"][..],
        &["validate-surface", "--surface", "hermitian:[[1,0],[0,-1]]"],
        &["integrate", "--expr", "1", "--weight", "dx"],
        &["pairing", "--expr", "1", "--grid", "4y4"],
        &["nirenberg", "--jet", "1,2,3"],
        &["frobnicate"],
    ] {
        let out = crlab(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn sphere_pairing_normalization() {
    let out = crlab(&["pairing", "--expr", "1", "--eta", "1", "--grid", "16"]);
    let v = &report(&out)["data"]["value"];
    let re = v[0].as_f64().unwrap();
    assert!((re - 4.0 * std::f64::consts::PI.powi(2)).abs() < 1e-8, "{re}");
}

#[test]
fn deterministic_under_seed() {
    let args = ["check", "--expr", "z1*conj(z2)", "--test", "plh", "--points", "20", "--seed", "3"];
    let strip = |o: &Output| {
        let mut v = report(o);
        v["wall_time_seconds"] = Value::Null;
        v
    };
    assert_eq!(strip(&crlab(&args)), strip(&crlab(&args)));
}

#[test]
fn config_corpus_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "seed = 11\npoints = 30\n\n[[corpus]]\nexpr = \"z1^2 + w2\"\ntest = \"sum\"\nexpect = true\n\n\
         [[corpus]]\nexpr = \"z1*conj(z1)\"\ntest = \"sum\"\nexpect = false\n",
    )
    .unwrap();
    let json = dir.path().join("out.json");
    let csv = dir.path().join("out.csv");
    let out = crlab(&["check", "--config", cfg.to_str().unwrap(), "--out", json.to_str().unwrap(), "--csv", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(r["seed"], 11);
    assert_eq!(r["checks"].as_array().unwrap().len(), 2);
    let table = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(table.lines().count(), 3);
    assert!(table.starts_with("criterion,name,label,surface,max_residual"));
}

#[test]
fn bad_config_names_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[[corpus]]\nexpr = \"z1 +\"\ntest = \"cr\"\nexpect = true\n").unwrap();
    let out = crlab(&["check", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("corpus[0].expr"));
}

#[test]
fn certify_subset_reports_criteria() {
    let out = crlab(&["certify", "--only", "1,2,4", "--points", "40"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    let ids: Vec<u64> = r["data"]["criteria"].as_array().unwrap().iter().map(|c| c["id"].as_u64().unwrap()).collect();
    assert_eq!(ids, vec![1, 2, 4]);
}

#[test]
fn decompose_reports_residuals() {
    let out = crlab(&["decompose", "--expr", "z1^2 + w2^3", "--points", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["data"]["convention"], "g(basepoint) = 0");
    assert!(r["checks"].as_array().unwrap().iter().all(|c| c["verdict"] == Value::Bool(true)));
}
