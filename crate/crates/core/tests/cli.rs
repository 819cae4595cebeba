//! The `zer` binary: exit codes, artifacts and reproducibility.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use zer::cli::{parse_config_str, Preset};

const SMALL: &str = r#"
[model]
kind = "chain"
cells = 64
t1 = -1.0
filling = 0.5

[rg]
epsilon_schedule = [1e-4]
"#;

fn zer(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zer")).args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    names
}

#[test]
fn run_writes_every_requested_artifact() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("out");
    let result = zer(&["run", &config, "--out", out.to_str().unwrap(), "--artifacts", "trace,bounds,matrices"]);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    assert_eq!(
        listing(&out),
        ["bounds.csv", "matrix_core.csv", "matrix_initial.csv", "matrix_reconstructed.csv", "trace.json"]
    );
    let trace: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("trace.json")).unwrap()).unwrap();
    assert_eq!(trace["core_modes"], 8);
    assert_eq!(trace["termination_reason"], "core_threshold");
    assert!(trace["max_correlation_error"].as_f64().unwrap() < 1e-2);
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(stdout.contains("core modes: 8"), "{stdout}");
}

#[test]
fn default_artifacts_have_headers() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("out");
    assert!(zer(&["run", &config, "--out", out.to_str().unwrap()]).status.success());
    let head = |name: &str| fs::read_to_string(out.join(name)).unwrap().lines().next().unwrap().to_string();
    assert_eq!(head("band_structure.csv"), "step,k_index,k,band,eigenvalue,label");
    assert!(head("correlations.csv").starts_with("x,exact_re,exact_im,zer_re,zer_im,abs_diff,level_1_re"));
    assert!(head("correlations.csv").ends_with("level_core_re,level_core_im"));
    assert_eq!(head("momentum_occupation.csv"), "k_index,k,level,n_k");
    assert_eq!(head("level_decomposition.csv"), "level,modes,particles,max_abs_x0");
    assert!(head("bounds.csv").starts_with("step,cells,epsilon"));
    assert!(!out.join("matrix_initial.csv").exists());
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), SMALL);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        assert!(zer(&["run", &config, "--out", dir.to_str().unwrap()]).status.success());
    }
    for name in listing(&a) {
        let (x, y) = (fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap());
        if name == "trace.json" {
            // the echoed output directory differs
            let strip = |bytes: Vec<u8>| String::from_utf8(bytes).unwrap().replace("/a", "").replace("/b", "");
            assert_eq!(strip(x), strip(y));
        } else {
            assert!(x == y, "{name} differs");
        }
    }
}

#[test]
fn validate_echoes_a_config_that_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), SMALL);
    let result = zer(&["validate", &config]);
    assert!(result.status.success());
    let echoed = String::from_utf8(result.stdout).unwrap();
    assert!(echoed.contains("gap_min"), "defaults are echoed: {echoed}");
    assert_eq!(parse_config_str(&echoed).unwrap(), parse_config_str(SMALL).unwrap());
}

#[test]
fn config_errors_exit_with_2() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = write_config(tmp.path(), &SMALL.replace("filling = 0.5\n", ""));
    let result = zer(&["validate", &missing]);
    assert_eq!(result.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&result.stderr).contains("filling"));

    let unknown = write_config(tmp.path(), &format!("{SMALL}typo = 3\n"));
    assert_eq!(zer(&["run", &unknown]).status.code(), Some(2));
    assert_eq!(zer(&["run", "--preset", "bogus"]).status.code(), Some(2));
    assert_eq!(zer(&["run"]).status.code(), Some(2));
    assert_eq!(zer(&["run", "--preset", "nn", "--artifacts", "trace,pictures"]).status.code(), Some(2));
}

#[test]
fn invalid_output_directory_leaves_no_files() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), SMALL);
    let blocker = tmp.path().join("blocker");
    fs::write(&blocker, "not a directory").unwrap();
    let out = blocker.join("out");
    let result = zer(&["run", &config, "--out", out.to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(2));
    assert_eq!(listing(tmp.path()), ["blocker", "run.toml"]);
}

#[test]
fn numerical_failures_exit_with_3() {
    // eight sites at half filling put two degenerate levels at the Fermi energy
    let tmp = tempfile::tempdir().unwrap();
    let text = SMALL.replace("cells = 64", "cells = 8").replace("filling = 0.5", "filling = 0.5\ndegeneracy = \"error\"");
    let config = write_config(tmp.path(), &text);
    let out = tmp.path().join("out");
    let result = zer(&["run", &config, "--out", out.to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&result.stderr).contains("degenerate"));
    assert!(listing(&out).is_empty());
}

#[test]
fn preset_with_overlay() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "[model]\ncells = 128\n[outputs]\nartifacts = [\"trace\"]\n");
    let out = tmp.path().join("out");
    let result = zer(&["run", &config, "--preset", "nn", "--out", out.to_str().unwrap()]);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    let trace: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("trace.json")).unwrap()).unwrap();
    assert_eq!(trace["model"]["cells"], 128);
    assert_eq!(trace["config"]["rg"]["epsilon_clock"], "first_distillation");
}

#[test]
fn presets_match_the_table() {
    let ssh = Preset::Ssh.config().unwrap();
    let spec = ssh.model_spec().unwrap();
    assert_eq!((spec.cells(), spec.orbitals_per_cell(), spec.filling()), (729, 2, 0.5));
    let nn = Preset::Nn.config().unwrap();
    assert_eq!((nn.model.cells, nn.model.t1, nn.model.filling), (1024, Some(-1.0), 0.5));
    let ext = Preset::Extended.config().unwrap();
    assert_eq!((ext.model.t1, ext.model.t2, ext.model.filling), (Some(-1.0), Some(-2.0), 0.4));
    assert_eq!(ext.rg.epsilon_schedule.len(), 6);
}
