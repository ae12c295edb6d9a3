//! End-to-end checks of the `panelgmm` binary: subcommand wiring, output
//! determinism, and the 0/2/3 exit-code contract.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_panelgmm"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf8 stdout")
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).expect("utf8 stderr")
}

/// Simulate a small panel into `dir` and return its path.
fn simulated_panel(dir: &tempfile::TempDir, seed: u64) -> PathBuf {
    let path = dir.path().join("panel.csv");
    let o = run(&[
        "simulate",
        "--seed",
        &seed.to_string(),
        "--entities",
        "26",
        "--periods",
        "10",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "simulate failed: {}", stderr(&o));
    path
}

#[test]
fn simulate_then_describe_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let panel = simulated_panel(&dir, 11);
    let o = run(&[
        "describe",
        "--panel",
        panel.to_str().unwrap(),
        "--vars",
        "y,x1",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("Descriptive statistics"));
    assert!(text.contains("y"));
    assert!(text.contains("Obs"));
}

#[test]
fn simulate_is_seed_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = std::fs::read(simulated_panel(&dir, 5)).unwrap();
    let dir2 = tempfile::tempdir().unwrap();
    let b = std::fs::read(simulated_panel(&dir2, 5)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn pipeline_reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let panel = simulated_panel(&dir, 3);
    let config = dir.path().join("run.toml");
    std::fs::write(
        &config,
        format!(
            r#"panel_csv = "{}"
format = "text"

[[model]]
name = "main"
dependent = "y"
regressors = ["x1"]
lags = 1
methods = ["pols", "fe", "re", "fgls", "gmm"]
gmm_iv = "L(1/4).y collapse"
"#,
            panel.display()
        ),
    )
    .unwrap();
    let first = run(&["pipeline", "--config", config.to_str().unwrap()]);
    let second = run(&["pipeline", "--config", config.to_str().unwrap()]);
    assert_eq!(first.status.code(), Some(0), "{}", stderr(&first));
    assert_eq!(first.stdout, second.stdout);
    let text = stdout(&first);
    assert!(text.contains("== Estimation results [main:estimation] =="));
    assert!(text.contains("== Difference GMM [main:gmm] =="));
}

#[test]
fn config_paths_resolve_relative_to_config_file() {
    let dir = tempfile::tempdir().unwrap();
    simulated_panel(&dir, 3);
    let config = dir.path().join("rel.toml");
    std::fs::write(
        &config,
        r#"panel_csv = "panel.csv"

[[model]]
name = "m"
dependent = "y"
regressors = ["x1"]
methods = ["pols"]
tests = []
"#,
    )
    .unwrap();
    // Invoke from a different working directory than the config's.
    let o = bin()
        .current_dir(std::env::temp_dir())
        .args(["pipeline", "--config", config.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn unknown_series_exits_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let panel = simulated_panel(&dir, 7);
    let o = run(&[
        "estimate",
        "--panel",
        panel.to_str().unwrap(),
        "--method",
        "pols",
        "--dep",
        "nope",
        "--regressors",
        "x1",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown series"));
}

#[test]
fn missing_input_flags_exit_validation_code() {
    let o = run(&["describe"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--panel"));
}

#[test]
fn duplicate_instrument_columns_exit_numerical_code() {
    let dir = tempfile::tempdir().unwrap();
    let panel = simulated_panel(&dir, 19);
    let o = run(&[
        "gmm",
        "--panel",
        panel.to_str().unwrap(),
        "--dep",
        "y",
        "--regressors",
        "x1",
        "--lags",
        "1",
        "--iv",
        "D.(L2.x1 L2.x1)",
        "--max-lag-depth",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(3), "stderr: {}", stderr(&o));
}

#[test]
fn pipeline_with_failing_stage_exits_validation_but_renders() {
    let dir = tempfile::tempdir().unwrap();
    let panel = simulated_panel(&dir, 23);
    let config = dir.path().join("bad.toml");
    std::fs::write(
        &config,
        format!(
            r#"panel_csv = "{}"

[[model]]
name = "broken"
dependent = "absent_series"
regressors = ["x1"]
methods = ["pols"]
tests = []
"#,
            panel.display()
        ),
    )
    .unwrap();
    let o = run(&["pipeline", "--config", config.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let text = stdout(&o);
    // The report still renders, carrying the stage error inline.
    assert!(text.contains("ERROR"));
    assert!(text.contains("unknown series"));
}

#[test]
fn json_report_parses_and_carries_full_precision() {
    let dir = tempfile::tempdir().unwrap();
    let panel = simulated_panel(&dir, 13);
    let o = run(&[
        "estimate",
        "--panel",
        panel.to_str().unwrap(),
        "--method",
        "fe",
        "--dep",
        "y",
        "--regressors",
        "x1",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).expect("valid json");
    let sections = v["sections"].as_array().unwrap();
    assert_eq!(sections[0]["id"], "estimate");
    let rows = sections[0]["table"]["rows"].as_array().unwrap();
    assert!(!rows.is_empty());
}

#[test]
fn out_flag_writes_file_instead_of_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let panel = simulated_panel(&dir, 29);
    let out = dir.path().join("report.txt");
    let o = run(&[
        "describe",
        "--panel",
        panel.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("Descriptive statistics"));
}

#[test]
fn test_subcommand_emits_decision_vocabulary() {
    let dir = tempfile::tempdir().unwrap();
    let panel = simulated_panel(&dir, 31);
    let o = run(&[
        "test",
        "--panel",
        panel.to_str().unwrap(),
        "--dep",
        "y",
        "--regressors",
        "x1",
        "--tests",
        "f,bplm,hausman",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("Specification tests"));
    assert!(text.contains("Result"));
    assert!(
        text.contains("Fixed Effect") || text.contains("Random Effect"),
        "selection row missing: {text}"
    );
}

#[test]
fn mc_subcommand_summarizes_bias() {
    let o = run(&[
        "mc",
        "--seed",
        "2",
        "--entities",
        "30",
        "--periods",
        "6",
        "--omega",
        "0.4",
        "--reps",
        "8",
        "--estimators",
        "fe",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("Monte Carlo: fe"));
    assert!(text.contains("Bias"));
    assert!(text.contains("8 of 8 replications completed"));
}
