use std::path::Path;
use std::process::{Command, Output};

const FIG1: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/fig1.aag");

fn cnml(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cnml"))
        .args(args)
        .env_remove("CNML_CONFIG")
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn check_figure_one() {
    let o = cnml(&["check", FIG1, "(G i0) -> (G ((! i1) -> (X o1)))"]);
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    assert_eq!(stdout(&o).trim(), "SAT");
    let o = cnml(&["check", FIG1, "G o1"]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.starts_with("UNSAT\nprefix:") && out.contains("loop:"), "{out}");
}

#[test]
fn check_budget_exhaustion_is_limit() {
    let o = cnml(&["check", FIG1, "G o1", "--set", "check.max_states=1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).starts_with("LIMIT"));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d.jsonl");
    let out = out.to_str().unwrap();
    assert_eq!(cnml(&["gen-data", "--count", "0", "--out", out]).status.code(), Some(2));
    assert_eq!(cnml(&["gen-data", "--out", out, "--set", "training.nope=1"]).status.code(), Some(2));
    assert_eq!(cnml(&["gen-data", "--out", out, "--preset", "huge"]).status.code(), Some(2));
    assert_eq!(cnml(&["frobnicate"]).status.code(), Some(2));
    assert!(!Path::new(out).exists());
}

#[test]
fn missing_input_is_a_runtime_failure() {
    let o = cnml(&["augment", "--input", "/nonexistent/x.jsonl", "--out", "/tmp/never.jsonl"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn config_file_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[generation]\ncount = 0\n").unwrap();
    let out = dir.path().join("d.jsonl");
    let o = Command::new(env!("CARGO_BIN_EXE_cnml"))
        .args(["gen-data", "--out", out.to_str().unwrap()])
        .env("CNML_CONFIG", &cfg)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

/// gen 200 pairs → augment → train 200 steps → mine N=20 sets → evaluate.
#[test]
fn end_to_end_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let ok = |args: &[&str]| {
        let o = cnml(args);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        o
    };
    ok(&["gen-data", "--count", "200", "--out", &p("pairs.jsonl"), "--set", "seed=3"]);
    let before = std::fs::read(p("pairs.jsonl")).unwrap();
    ok(&["augment", "--input", &p("pairs.jsonl"), "--out", &p("aug.jsonl")]);
    assert_eq!(std::fs::read(p("pairs.jsonl")).unwrap(), before, "inputs are never modified");
    ok(&["batch", "--input", &p("aug.jsonl"), "--out", &p("batches.jsonl")]);
    ok(&["train", "--input", &p("aug.jsonl"), "--out", &p("model.ckpt"), "--steps", "200", "--set", "training.batch_size=16"]);
    let log = std::fs::read_to_string(p("model.ckpt.log.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 200);
    ok(&["mine-retrieval", "--input", &p("aug.jsonl"), "--out", &p("sets.jsonl"), "--size", "20", "--count", "10"]);
    let o = ok(&["eval-retrieval", "--checkpoint", &p("model.ckpt"), "--sets", &p("sets.jsonl"), "--out", &p("metrics.tsv")]);
    let table = std::fs::read_to_string(p("metrics.tsv")).unwrap();
    assert_eq!(stdout(&o), table);
    for row in ["cnml", "untrained", "random"] {
        assert!(table.lines().any(|l| l.starts_with(row)), "{table}");
    }
    for artifact in ["pairs.jsonl", "aug.jsonl", "batches.jsonl", "model.ckpt", "sets.jsonl", "metrics.tsv"] {
        let snap = p(&format!("{artifact}.config.toml"));
        assert!(Path::new(&snap).exists(), "{snap}");
    }
    // The snapshot replays the run.
    let snap = p("pairs.jsonl.config.toml");
    ok(&["gen-data", "--config", &snap, "--out", &p("again.jsonl")]);
    assert_eq!(std::fs::read(p("again.jsonl")).unwrap(), before);
}
