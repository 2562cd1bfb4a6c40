//! Command-line contract: output files, exit codes and replay round trips.

use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

const SMALL: &[&str] = &["--set", "epochs=2", "--set", "games_per_epoch=128", "--set", "eval.n_games=50"];

fn qsearch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsearch")).args(args).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn train_into(dir: &Path) {
    let mut args = vec!["train", "--out", path(dir), "--seed", "3"];
    args.extend_from_slice(SMALL);
    let out = qsearch(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn train_writes_log_checkpoint_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    train_into(dir.path());
    for f in ["log.csv", "checkpoint_final.json", "manifest.json"] {
        assert!(dir.path().join(f).exists(), "missing {f}");
    }
    let log = std::fs::read_to_string(dir.path().join("log.csv")).unwrap();
    let mut lines = log.lines();
    assert!(lines.next().unwrap().starts_with("epoch,mode,n_games,success_rate"));
    assert_eq!(lines.count(), 2);
}

#[test]
fn unknown_config_key_exits_2() {
    let out = qsearch(&["config", "--set", "no_such_key=1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = qsearch(&["train", "--set", "learning_rate=-1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_prints_digest() {
    let a = qsearch(&["config", "--set", "alpha=2"]);
    let b = qsearch(&["config", "--set", "alpha=2"]);
    let c = qsearch(&["config", "--set", "alpha=3"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn eval_with_replay_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    train_into(dir.path());
    let ck = dir.path().join("checkpoint_final.json");
    let eval_dir = dir.path().join("eval");
    let out = qsearch(&[
        "eval",
        "--checkpoint",
        path(&ck),
        "--out",
        path(&eval_dir),
        "--mode",
        "sample",
        "--games",
        "40",
        "--replay",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = std::fs::read_to_string(eval_dir.join("report.csv")).unwrap();
    assert_eq!(report.lines().count(), 2);
    assert!(report.lines().nth(1).unwrap().contains(",SAMPLE,40,"));

    let replay = eval_dir.join("replay_sample.json");
    let out = qsearch(&["replay", "--replay", path(&replay)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn eval_rejects_checkpoint_version() {
    let dir = tempfile::tempdir().unwrap();
    train_into(dir.path());
    let ck = dir.path().join("checkpoint_final.json");
    let text = std::fs::read_to_string(&ck).unwrap();
    let mut json: serde_json::Value = serde_json::from_str(&text).unwrap();
    json["format_version"] = serde_json::json!(99);
    std::fs::write(&ck, json.to_string()).unwrap();
    let out = qsearch(&["eval", "--checkpoint", path(&ck), "--out", path(&dir.path().join("e"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn ablate_reports_every_variant() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["ablate", "--out", path(dir.path()), "--set", "ablate.seeds=0,1"];
    args.extend_from_slice(SMALL);
    let out = qsearch(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let runs = std::fs::read_to_string(dir.path().join("ablation_runs.csv")).unwrap();
    for variant in ["full", "wo_rb", "wo_rc", "rs_only"] {
        let n = runs.lines().filter(|l| l.starts_with(&format!("{variant},"))).count();
        assert_eq!(n, 2 * 2, "{variant}: two seeds by two modes");
    }
    assert!(dir.path().join("ablation_compare_greedy.csv").exists());
    assert!(dir.path().join("ablation_compare_sample.csv").exists());
}

#[test]
fn play_finishes_on_scripted_answers() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_qsearch"))
        .args(["play", "--seed", "1", "--set", "j_max=3"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"maybe\nn\nno\nna\ny\n").unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout).to_lowercase();
    assert!(text.contains("guess"), "{text}");
}
