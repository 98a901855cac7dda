mod common;

use std::fs;
use std::process::Command;

use common::tiny_config;

fn lvse() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lvse"))
}

#[test]
fn generate_with_config_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    fs::write(&cfg_path, serde_json::to_string(&tiny_config()).unwrap()).unwrap();
    let out = dir.path().join("out");
    let status = lvse()
        .args(["generate", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(&out)
        .args(["--seed", "11"])
        .env("RUST_LOG", "error")
        .status()
        .unwrap();
    assert!(status.success());
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("data/S2/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 11);
    assert_eq!(manifest["config_hash"], tiny_config().with_seed(11).hash());
}

#[test]
fn hard_failures_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"alpha": 2.0}"#).unwrap();
    let out = lvse().args(["generate", "--config"]).arg(&bad).arg("--out").arg(dir.path()).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpha"));

    let unknown = lvse().args(["run-matrix", "--cells", "S9"]).arg("--out").arg(dir.path()).output().unwrap();
    assert!(!unknown.status.success());

    // nothing generated yet
    let missing = lvse().arg("run-matrix").arg("--out").arg(dir.path().join("empty")).output().unwrap();
    assert!(!missing.status.success());
}
