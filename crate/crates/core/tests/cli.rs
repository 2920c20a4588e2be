//! End-to-end checks of the installed binary: every subcommand runs against
//! a small schedule in a temporary directory, and failures exit nonzero with
//! a diagnostic on stderr.

use std::path::Path;
use std::process::{Command, Output};

use dlcbench::constraints::ConstraintSchedule;
use dlcbench::metrics::BestKnownTable;

fn bin(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dlcbench"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary must spawn")
}

fn run_ok(dir: &Path, args: &[&str]) -> String {
    let out = bin(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("stdout must be utf-8")
}

#[test]
fn subcommands_cover_the_whole_workflow() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();

    let stdout = run_ok(
        root,
        &[
            "gen-schedule",
            "--out",
            "sched.json",
            "--tau",
            "100",
            "--buffer",
            "100",
            "--changes",
            "3",
            "--dimension",
            "5",
            "--seed",
            "9",
        ],
    );
    assert!(stdout.contains("4 frames"), "got: {stdout}");
    let schedule = ConstraintSchedule::load(root.join("sched.json")).unwrap();
    assert_eq!(schedule.frames.len(), 4);
    assert_eq!(schedule.dimension, 5);

    let stdout = run_ok(
        root,
        &[
            "best-known",
            "--schedule",
            "sched.json",
            "--analytic",
            "--out",
            "table.json",
        ],
    );
    assert!(stdout.contains("4 frames"), "got: {stdout}");
    let table = BestKnownTable::load(root.join("table.json")).unwrap();
    assert_eq!(table.entries.len(), 4);

    let stdout = run_ok(
        root,
        &[
            "run",
            "--schedule",
            "sched.json",
            "--handler",
            "feasibility",
            "--seed",
            "5",
            "--runs",
            "2",
            "--out",
            "runs",
            "--best-known",
            "table.json",
        ],
    );
    assert!(stdout.contains("offline error"), "got: {stdout}");
    assert!(stdout.contains("mean offline error over 2 runs"));
    assert!(root.join("runs/trace_feasibility_run_00.csv").is_file());
    assert!(root.join("runs/trace_feasibility_run_01.csv").is_file());

    let config = r#"{
        "functions": ["sphere"],
        "handlers": ["feasibility", "penalty", "epsilon"],
        "settings": [{"mode": "translate", "severity": "medium", "tau": 100}],
        "runs": 2,
        "dimension": 5,
        "changes": 3,
        "buffer": 100,
        "baseSeed": 11,
        "bestKnown": "analytic"
    }"#;
    std::fs::write(root.join("exp.json"), config).unwrap();
    let stdout = run_ok(
        root,
        &[
            "matrix",
            "--config",
            "exp.json",
            "--out",
            "results",
            "--workers",
            "1",
        ],
    );
    assert!(stdout.contains("6 jobs"), "got: {stdout}");
    assert!(stdout.contains("completed 6 skipped 0 failed 0"));
    assert!(root.join("results/summary.csv").is_file());
    assert!(root
        .join("results/sphere_translate_medium_100/series.csv")
        .is_file());

    // A rerun skips every job but still refreshes the reports.
    let stdout = run_ok(
        root,
        &[
            "matrix",
            "--config",
            "exp.json",
            "--out",
            "results",
            "--workers",
            "1",
        ],
    );
    assert!(stdout.contains("completed 0 skipped 6 failed 0"));

    let summary_before = std::fs::read(root.join("results/summary.csv")).unwrap();
    std::fs::remove_file(root.join("results/stats.csv")).unwrap();
    run_ok(root, &["report", "--in", "results", "--alpha", "0.05"]);
    assert!(root.join("results/stats.csv").is_file());
    assert_eq!(
        std::fs::read(root.join("results/summary.csv")).unwrap(),
        summary_before,
        "report regeneration must reproduce identical aggregates"
    );
}

#[test]
fn missing_schedule_exits_nonzero_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(
        dir.path(),
        &[
            "run",
            "--schedule",
            "missing.json",
            "--handler",
            "penalty",
            "--out",
            "runs",
        ],
    );
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("missing.json"), "got: {stderr}");
}

#[test]
fn analytic_table_rejects_non_sphere_objectives() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(
        dir.path(),
        &[
            "gen-schedule",
            "--out",
            "sched.json",
            "--tau",
            "100",
            "--buffer",
            "100",
            "--changes",
            "1",
            "--dimension",
            "4",
            "--seed",
            "2",
        ],
    );
    let out = bin(
        dir.path(),
        &[
            "best-known",
            "--schedule",
            "sched.json",
            "--function",
            "ackley",
            "--analytic",
            "--out",
            "t.json",
        ],
    );
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("sphere"), "got: {stderr}");
}
