use std::process::{Command, Output};

use serde_json::Value;

fn g2forge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_g2forge"))
        .args(args)
        .env_remove("G2FORGE_THREADS")
        .output()
        .expect("binary runs")
}

#[test]
fn identities_suite_passes() {
    let out = g2forge(&["identities"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("[identities] PASS"), "{text}");
    assert!(text.contains("contraction_identities_random"));
}

#[test]
fn json_report_and_output_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = g2forge(&["--suite", "symbols", "--seed", "7", "--json", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let printed: Value = serde_json::from_slice(&out.stdout).unwrap();
    let saved: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(printed, saved);
    assert_eq!(saved["suite"], "symbols");
    assert_eq!(saved["environment"]["seed"], 7);
    let checks = saved["suites"][0]["checks"].as_array().unwrap();
    let a = checks.iter().find(|c| c["name"] == "uniqueness_a").unwrap();
    assert_eq!(a["actual"], "-1/3");
    assert!(dir.path().join("report.txt").exists());
}

#[test]
fn config_file_is_read_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, "suite = \"symbols\"\nseed = 3\n[grid]\npoints = 32\n").unwrap();
    let out = g2forge(&["--config", path.to_str().unwrap(), "--seed", "5", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["suite"], "symbols");
    assert_eq!(report["environment"]["seed"], 5);
    assert_eq!(report["environment"]["config"]["grid"]["points"], 32);
}

#[test]
fn bad_configuration_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "seed = 1\n[grid]\npoints = 48\n").unwrap();
    let out = g2forge(&["identities", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("grid.points") && err.contains("line 3"), "{err}");

    std::fs::write(&path, "[flow]\nsteps = 10\nstep = 1\n").unwrap();
    let out = g2forge(&["identities", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("flow.step"));

    assert_eq!(g2forge(&["nonsense"]).status.code(), Some(2));
    assert_eq!(g2forge(&["identities", "--grid", "17"]).status.code(), Some(2));
    let missing = g2forge(&["identities", "--config", "/nonexistent/g2forge.toml"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn invalid_thread_count_is_a_configuration_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_g2forge"))
        .arg("identities")
        .env("G2FORGE_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
