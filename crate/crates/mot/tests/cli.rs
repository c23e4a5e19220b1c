mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::{bundle, manifest};

fn mot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mot")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn replay_run(out: &Path, strategies: &str) -> Output {
    let b = bundle();
    mot(&[
        "run",
        "--dataset",
        "humaneval",
        "--data",
        b.join("problems.jsonl").to_str().unwrap(),
        "--strategy",
        strategies,
        "--mode",
        "replay",
        "--fixtures",
        b.join("llm").to_str().unwrap(),
        "--exec-fixtures",
        b.join("exec.json").to_str().unwrap(),
        "--price-in",
        "1e-6",
        "--price-out",
        "2e-6",
        "--out",
        out.to_str().unwrap(),
    ])
}

#[test]
fn run_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = replay_run(dir.path(), "mot,zero_shot,cot,mot_no_graph,mot_no_modularization");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("25 jobs run"));

    let o = mot(&["report", "--runs", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    let text = stdout(&o);
    let deltas = &manifest()["report_deltas"];
    for (strategy, want) in deltas.as_object().unwrap() {
        for cell in want.as_array().unwrap() {
            let cell = format!("({})", cell.as_str().unwrap());
            assert!(text.contains(&cell), "{strategy}: {cell} missing from\n{text}");
        }
    }
    assert!(text.contains("| 0.003452"));
    assert!(text.contains("1820.0"));

    let o = mot(&["report", "--runs", dir.path().to_str().unwrap(), "--csv", "-"]);
    let csv = stdout(&o);
    assert!(csv.starts_with("dataset,"));
    assert!(csv.lines().count() > 5);
}

#[test]
fn report_without_summary_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = mot(&["report", "--runs", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn replay_without_fixture_dir_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let b = bundle();
    let o = mot(&[
        "run",
        "--dataset",
        "humaneval",
        "--data",
        b.join("problems.jsonl").to_str().unwrap(),
        "--mode",
        "replay",
        "--exec-fixtures",
        b.join("exec.json").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("fixtures"));
}

#[test]
fn missing_fixtures_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let empty = tempfile::tempdir().unwrap();
    let b = bundle();
    let o = mot(&[
        "run",
        "--dataset",
        "humaneval",
        "--data",
        b.join("problems.jsonl").to_str().unwrap(),
        "--strategy",
        "zero_shot",
        "--mode",
        "replay",
        "--fixtures",
        empty.path().to_str().unwrap(),
        "--exec-fixtures",
        b.join("exec.json").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(dir.path().join("failures.json").exists());
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let b = bundle();
    let cfg = serde_json::json!({
        "dataset": "humaneval",
        "data": b.join("problems.jsonl"),
        "strategies": ["mot", "cot"],
        "mode": "replay",
        "fixtures": b.join("llm"),
        "executor": {"recorded": b.join("exec.json")},
        "provider": {"pricing": {"usd_per_input_token": 1e-6, "usd_per_output_token": 2e-6}},
        "out": dir.path().join("ignored"),
    });
    let path = dir.path().join("run.json");
    std::fs::write(&path, cfg.to_string()).unwrap();
    let out = dir.path().join("used");
    let o = mot(&[
        "run",
        "--config",
        path.to_str().unwrap(),
        "--strategy",
        "zero_shot",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("5 jobs run"));
    assert!(out.join("summary.json").exists());
    assert!(!dir.path().join("ignored").exists());
}

#[test]
fn graph_command_prints_and_writes_the_graph() {
    let dir = tempfile::tempdir().unwrap();
    let b = bundle();
    let target = dir.path().join("graph.json");
    let args = |task: &str| {
        vec![
            "graph".to_string(),
            "--dataset".into(),
            "humaneval".into(),
            "--data".into(),
            b.join("problems.jsonl").to_string_lossy().into_owned(),
            "--task".into(),
            task.into(),
            "--mode".into(),
            "replay".into(),
            "--fixtures".into(),
            b.join("llm").to_string_lossy().into_owned(),
            "--output".into(),
            target.to_string_lossy().into_owned(),
        ]
    };
    let o = Command::new(env!("CARGO_BIN_EXE_mot")).args(args("Sample/0")).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("Stats (high, intermediate, detailed, edges): (3, 5, 5, 10)"), "{text}");
    assert!(text.contains("Validation: ok"));
    let written: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&target).unwrap()).unwrap();
    assert_eq!(written["nodes"].as_array().unwrap().len(), 13);

    std::fs::remove_file(&target).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_mot")).args(args("Sample/4")).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("No valid MLR graph after 3 attempts"));
    assert!(!target.exists());
}
