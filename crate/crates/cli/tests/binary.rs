use std::fs;
use std::process::{Command, Output};

use channel_charting_cli::config::ExperimentConfig;
use tempfile::tempdir;

fn cchart(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cchart")).args(args).output().unwrap()
}

fn error_line(out: &Output) -> serde_json::Value {
    let stderr = String::from_utf8(out.stderr.clone()).unwrap();
    let line = stderr.lines().last().expect("an error line");
    serde_json::from_str(line).expect("error line is JSON")
}

#[test]
fn default_preset_generates_reference_dimensions() {
    let dir = tempdir().unwrap();
    let (cfg, data) = (dir.path().join("cfg.json"), dir.path().join("d.ccd"));
    let out = cchart(&["preset", "default", "--out", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    let out = cchart(&["generate", "--config", cfg.to_str().unwrap(), "--out", data.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let bytes = fs::read(&data).unwrap();
    let word = |i: usize| u64::from_le_bytes(bytes[4 + 8 * i..12 + 8 * i].try_into().unwrap());
    assert_eq!(&bytes[..4], b"CCD1");
    assert_eq!((word(0), word(1), word(2)), (5910, 1024, 2));
}

#[test]
fn schema_violations_exit_2() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let mut v: serde_json::Value = serde_json::from_str(&ExperimentConfig::scaled(50).to_json()).unwrap();
    v["encoder"]["init"] = "clever".into();
    fs::write(&cfg, v.to_string()).unwrap();
    let out = cchart(&["generate", "--config", cfg.to_str().unwrap(), "--out", "unused"]);
    assert_eq!(out.status.code(), Some(2));
    let e = error_line(&out);
    assert_eq!(e["error"], "config");
    assert_eq!(e["exit_code"], 2);
}

#[test]
fn dimension_mismatch_exits_3() {
    let dir = tempdir().unwrap();
    let p = |s: &str| dir.path().join(s).to_str().unwrap().to_string();
    let mut small = ExperimentConfig::scaled(60);
    small.scenario.radio.n_subcarriers = 1;
    small.encoder.n_init = 10;
    fs::write(p("small.json"), small.to_json()).unwrap();
    fs::write(p("big.json"), ExperimentConfig::scaled(60).to_json()).unwrap();
    assert!(cchart(&["generate", "--config", &p("small.json"), "--out", &p("d")]).status.success());
    let out = cchart(&["init", "--config", &p("big.json"), "--dataset", &p("d"), "--out", &p("m")]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_line(&out)["error"], "dimension");
}

#[test]
fn io_failures_exit_4() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, ExperimentConfig::scaled(50).to_json()).unwrap();
    let missing = dir.path().join("missing.json");
    let out = cchart(&["generate", "--config", missing.to_str().unwrap(), "--out", "x"]);
    assert_eq!(out.status.code(), Some(4));
    let bad_out = dir.path().join("no/such/dir/d.ccd");
    let out = cchart(&["generate", "--config", cfg.to_str().unwrap(), "--out", bad_out.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(error_line(&out)["error"], "io");
}

#[test]
fn seed_override_changes_the_trajectory() {
    let dir = tempdir().unwrap();
    let p = |s: &str| dir.path().join(s).to_str().unwrap().to_string();
    let mut cfg = ExperimentConfig::scaled(40);
    cfg.scenario.radio.n_subcarriers = 1;
    fs::write(p("cfg.json"), cfg.to_json()).unwrap();
    for (name, seed) in [("a", "5"), ("b", "5"), ("c", "6")] {
        let out = cchart(&["--seed-override", seed, "generate", "--config", &p("cfg.json"), "--out", &p(name)]);
        assert!(out.status.success());
    }
    let read = |s: &str| fs::read(p(s)).unwrap();
    assert_eq!(read("a"), read("b"));
    assert_ne!(read("a"), read("c"));
}
