//! End-to-end command tests: exit codes, config validation, preset
//! parsing, and full command chains over real files.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use curatron_cli::commands::metrics::MetricsDocument;
use curatron_cli::{run_command, CommandKind, Config};
use tempfile::tempdir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_curatron"))
}

fn preset(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("presets").join(name)
}

fn chain(config: &Config, seed: u64, out_dir: &Path, commands: &[CommandKind]) {
    for &command in commands {
        run_command(command, config, seed, out_dir).unwrap();
    }
}

#[test]
fn unknown_config_sections_and_keys_exit_with_validation_code() {
    let dir = tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    fs::write(&config, "[simulate]\nnu = 2.0\nspread = 1.0\n\n[experimnt]\nn = 15\n").unwrap();
    let out = bin()
        .args(["--config", config.to_str().unwrap(), "--out-dir"])
        .arg(dir.path())
        .arg("simulate")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("spread"), "stderr: {stderr}");
    assert!(stderr.contains("experimnt"), "stderr: {stderr}");
}

#[test]
fn missing_input_file_exits_with_validation_code() {
    let dir = tempdir().unwrap();
    let out = bin().arg("--out-dir").arg(dir.path()).arg("recover").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("corrupted_matrix.csv"), "stderr: {stderr}");
}

#[test]
fn exhausted_solver_budget_exits_with_non_convergence_code() {
    let dir = tempdir().unwrap();
    let config = dir.path().join("tight.toml");
    fs::write(
        &config,
        "[corrupt]\nap = 0.2\n\n[recover]\npipeline = \"roratron\"\nmax_iters = 1\n",
    )
    .unwrap();
    let run = |cmd: &str| {
        bin()
            .args(["--config", config.to_str().unwrap(), "--seed", "7", "--out-dir"])
            .arg(dir.path())
            .arg(cmd)
            .output()
            .unwrap()
    };
    assert!(run("simulate").status.success());
    assert!(run("corrupt").status.success());
    let out = run("recover");
    assert_eq!(out.status.code(), Some(3));
    assert!(dir.path().join("recovered_matrix.csv").exists(), "artifacts written for inspection");
}

#[test]
fn every_preset_parses() {
    for name in ["fig2.toml", "fig3.toml", "fig4.toml", "fig5.toml", "sec7_5_desk.toml"] {
        Config::load(&preset(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn single_instance_repair_chain_meets_the_error_bar() {
    let config = Config::load(&preset("fig3.toml")).unwrap();
    let dir = tempdir().unwrap();
    chain(
        &config,
        42,
        dir.path(),
        &[CommandKind::Simulate, CommandKind::Corrupt, CommandKind::Recover, CommandKind::Metrics],
    );
    let text = fs::read_to_string(dir.path().join("metrics.json")).unwrap();
    let doc: MetricsDocument = serde_json::from_str(&text).unwrap();
    assert!(doc.nfe <= 0.02, "nfe {}", doc.nfe);
    assert_eq!(doc.dist, Some(0.0));
}

#[test]
fn completion_pipelines_agree_when_nothing_is_corrupted() {
    let config_text = "[corrupt]\ndp = 0.3\n\n[recover]\npipeline = \"coratron\"\n";
    let coratron: Config = Config::parse(config_text).unwrap();
    let curatron: Config =
        Config::parse(&config_text.replace("coratron", "curatron")).unwrap();
    let (a, b) = (tempdir().unwrap(), tempdir().unwrap());
    let stages = [CommandKind::Simulate, CommandKind::Corrupt, CommandKind::Recover];
    chain(&coratron, 3, a.path(), &stages);
    chain(&curatron, 3, b.path(), &stages);
    let left = fs::read(a.path().join("ranking.json")).unwrap();
    let right = fs::read(b.path().join("ranking.json")).unwrap();
    assert_eq!(left, right, "rankings differ between coratron and curatron");
}

#[test]
fn seed_flag_changes_the_draw() {
    let dir = tempdir().unwrap();
    let run = |seed: &str, sub: &str| {
        let out_dir = dir.path().join(sub);
        let out = bin()
            .args(["--seed", seed, "--out-dir"])
            .arg(&out_dir)
            .arg("simulate")
            .output()
            .unwrap();
        assert!(out.status.success());
        fs::read(out_dir.join("truth_matrix.csv")).unwrap()
    };
    assert_ne!(run("1", "a"), run("2", "b"));
    assert_eq!(run("1", "c"), run("1", "d"));
}
