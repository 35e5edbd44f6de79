use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const SMALL: &str = r#"
[abm]
n_consumers = 150
horizon = 25

[ga]
population_size = 4
generations = 1
replications_per_candidate = 1

[reproduce]
abm_replications = 2
ga_population = 4
ga_generations = 1
ga_validation_seeds = 2

[meanfield]
n_cells = 64
t_end = 0.2
"#;

fn goldilocks(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_goldilocks")).args(args).output().expect("binary runs")
}

fn small_config(dir: &Path) -> String {
    let path = dir.join("small.toml");
    std::fs::write(&path, SMALL).unwrap();
    path.to_str().unwrap().to_string()
}

fn error_json(out: &Output) -> Value {
    assert!(!out.status.success());
    serde_json::from_slice(&out.stderr).expect("error is JSON")
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn static_json_writes_one_equilibrium_record() {
    let tmp = tempfile::tempdir().unwrap();
    let out = goldilocks(&["static", "--format", "json", "--out", tmp.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["cs_rises"], true);
    let doc: Value =
        serde_json::from_slice(&std::fs::read(tmp.path().join("static/equilibrium.json")).unwrap()).unwrap();
    assert_eq!(doc["schema"], "market_equilibrium");
    assert!(doc["data"]["welfare"].is_number());
    let m = manifest(tmp.path());
    assert!(m["files"]["static/equilibrium.json"].is_string());
    assert_eq!(m["invocation"]["command"]["name"], "static");
}

#[test]
fn abm_with_same_seed_is_bit_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let out = goldilocks(&["abm", "--seed", "7", "--config", &cfg, "--out", dir.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let (ma, mb) = (manifest(&a), manifest(&b));
    assert_eq!(ma["files"], mb["files"]);
    assert_eq!(ma["seed"], 7);
    assert!(ma["files"]["abm/records.csv"].is_string());
    let other = tmp.path().join("c");
    goldilocks(&["abm", "--seed", "8", "--config", &cfg, "--out", other.to_str().unwrap()]);
    assert_ne!(manifest(&other)["files"]["abm/series.csv"], ma["files"]["abm/series.csv"]);
}

#[test]
fn verify_regenerates_and_detects_tampering() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("run");
    let d = dir.to_str().unwrap();
    assert!(goldilocks(&["policy", "--plots", "--out", d]).status.success());
    assert!(dir.join("plots/welfare.svg").exists());
    let ok = goldilocks(&["verify", d]);
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stdout));
    std::fs::write(dir.join("policy/scan.csv"), "tampered").unwrap();
    let bad = goldilocks(&["verify", d]);
    assert_eq!(error_json(&bad)["error"], "criteria_failed");
    assert!(String::from_utf8_lossy(&bad.stdout).contains("policy/scan.csv"));
}

#[test]
fn config_errors_are_machine_readable() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("bad.toml");
    std::fs::write(&path, "[model]\nbetta = 2.0\n").unwrap();
    let e = error_json(&goldilocks(&["static", "--config", path.to_str().unwrap()]));
    assert_eq!(e["error"], "config");
    let msg = e["message"].as_str().unwrap();
    assert!(msg.contains("line 2") && msg.contains("model.beta"), "{msg}");

    std::fs::write(&path, "[model]\nbeta = -1.0\n").unwrap();
    let e = error_json(&goldilocks(&["static", "--config", path.to_str().unwrap()]));
    assert!(e["message"].as_str().unwrap().contains("model.beta"));

    let e = error_json(&goldilocks(&["static", "--config", "/nonexistent/x.toml"]));
    assert!(e["message"].as_str().unwrap().contains("/nonexistent/x.toml"));
}

#[test]
fn usage_errors_are_json_too() {
    assert_eq!(error_json(&goldilocks(&["static", "--seed", "minus-one"]))["error"], "usage");
    assert_eq!(error_json(&goldilocks(&["nonsense"]))["error"], "usage");
    assert_eq!(error_json(&goldilocks(&["abm", "--replications", "0"]))["error"], "invalid_param");
    assert!(goldilocks(&["--help"]).status.success());
}

#[test]
fn hollow_and_meanfield_write_their_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let d = tmp.path().join("out");
    let out = goldilocks(&["hollow", "--plots", "--out", d.to_str().unwrap()]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(d.join("hollow/histogram.csv")).unwrap();
    assert!(csv.starts_with("# schema: quality_histogram v1\nbin_left,bin_right,mass_pre,mass_post\n"));
    assert!(d.join("plots/quality.svg").exists());
    let out = goldilocks(&["meanfield", "--config", &cfg]);
    let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["free_energy_non_increasing"], true);
}

#[test]
fn calibrate_reports_its_best_candidate() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let out = goldilocks(&["calibrate", "--config", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(summary["best"]["abm"]["exit_threshold"].is_number());
}

#[test]
fn reproduce_prints_every_criterion() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let out = goldilocks(&["reproduce", "--config", &cfg, "--out", tmp.path().join("r").to_str().unwrap()]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    let lines: Vec<&str> = stdout.lines().filter(|l| l.starts_with("criterion")).collect();
    assert_eq!(lines.len(), 14, "{stdout}");
    assert!(lines[13].contains("criterion 14 PASS"), "{}", lines[13]);
    // two seeds cannot meet the ensemble criteria
    assert_eq!(error_json(&out)["error"], "criteria_failed");
    assert!(tmp.path().join("r/report.txt").exists());
}
