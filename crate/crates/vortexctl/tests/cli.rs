//! End-to-end runs of the binary on small grids.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sha2::{Digest, Sha256};
use tempfile::TempDir;

const SMALL: [&str; 4] = ["--n", "400", "--rmax", "15"];

fn run(cache: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vortexctl"))
        .args(args)
        .env("VORTEXCTL_CACHE", cache)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn out_arg(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

#[test]
fn invalid_values_exit_with_config_code() {
    let tmp = TempDir::new().unwrap();
    let out = out_arg(tmp.path(), "o");
    let o = run(tmp.path(), &["profile", "--delta", "0.5", "--out", &out]);
    assert_eq!(code(&o), 2);
    let o = run(tmp.path(), &["evolve", "--formulation", "epsilon2", "--out", &out]);
    assert_eq!(code(&o), 2);
    let o = run(tmp.path(), &["no-such-command"]);
    assert_eq!(code(&o), 2);
    let o = run(tmp.path(), &["profile", "--m", "one"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn unknown_config_keys_are_rejected() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("c.toml");
    fs::write(&cfg, "[grid]\nrmax = 15.0\n").unwrap();
    let o = run(tmp.path(), &["profile", "--config", cfg.to_str().unwrap(), "--out", &out_arg(tmp.path(), "o")]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("rmax"));
}

#[test]
fn profile_writes_manifest_with_hashes() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("p");
    let o = run(tmp.path(), &[&["profile", "--out", out.to_str().unwrap()][..], &SMALL].concat());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "profile");
    assert_eq!(manifest["config"]["grid"]["n"], 400);
    let outputs = manifest["outputs"].as_array().unwrap();
    assert!(outputs.len() >= 4);
    for e in outputs {
        let bytes = fs::read(out.join(e["path"].as_str().unwrap())).unwrap();
        assert_eq!(e["sha256"].as_str().unwrap(), format!("{:x}", Sha256::digest(&bytes)));
    }
    assert!(out.join("config.toml").exists());
}

#[test]
fn config_file_round_trips_through_output() {
    let tmp = TempDir::new().unwrap();
    let first = tmp.path().join("a");
    let o = run(tmp.path(), &[&["profile", "--m", "2", "--out", first.to_str().unwrap()][..], &SMALL].concat());
    assert_eq!(code(&o), 0);
    // replaying the resolved config reproduces the run
    let second = out_arg(tmp.path(), "b");
    let cfg = first.join("config.toml");
    let o = run(tmp.path(), &["profile", "--config", cfg.to_str().unwrap(), "--out", &second]);
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read(first.join("profile.csv")).unwrap(), fs::read(tmp.path().join("b/profile.csv")).unwrap());
}

fn assert_identical_outputs(a: &Path, b: &Path) {
    let mut names: Vec<_> = fs::read_dir(a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    let mut compared = 0;
    for n in names {
        let s = n.to_string_lossy();
        if s == "manifest.json" || s == "config.toml" {
            continue;
        }
        assert_eq!(fs::read(a.join(&n)).unwrap(), fs::read(b.join(&n)).unwrap(), "{s} differs");
        compared += 1;
    }
    assert!(compared > 0);
}

#[test]
fn runs_are_byte_for_byte_deterministic() {
    let tmp = TempDir::new().unwrap();
    for cmd in [
        &["reconstruct"][..],
        &["evolve", "--T", "1", "--dt", "0.05"],
        &["green"],
    ] {
        let dirs = [tmp.path().join(format!("{}1", cmd[0])), tmp.path().join(format!("{}2", cmd[0]))];
        for d in &dirs {
            let o = run(tmp.path(), &[cmd, &["--out", d.to_str().unwrap()], &SMALL].concat());
            assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        }
        assert_identical_outputs(&dirs[0], &dirs[1]);
    }
}

#[test]
fn numerical_failure_exits_with_code_3_and_keeps_manifest() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("c.toml");
    fs::write(&cfg, "[spectra]\nreconstruct_max_iter = 1\n").unwrap();
    let out = tmp.path().join("r");
    let o = run(
        tmp.path(),
        &[&["reconstruct", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()][..], &SMALL].concat(),
    );
    assert_eq!(code(&o), 3);
    let manifest = fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(manifest.contains("did not converge"));
}

#[test]
fn lemmas_write_one_report_per_check() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("c.toml");
    fs::write(&cfg, "[lemmalab]\nn_samples = 8\nrefine = false\n").unwrap();
    let out = tmp.path().join("l");
    let o = run(tmp.path(), &[&["lemmas", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()][..], &SMALL].concat());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let suite: serde_json::Value = serde_json::from_slice(&fs::read(out.join("lemmas.json")).unwrap()).unwrap();
    let reports = suite["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 15);
    assert!(reports.iter().all(|r| r["n_samples"] == 8));
    let per_check = fs::read_dir(&out).unwrap().filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().starts_with("lemma_")).count();
    assert_eq!(per_check, 15);
}
