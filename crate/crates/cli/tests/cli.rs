//! Subcommand behavior: exit codes, file formats, and determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_avoidlab"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).env_remove("AVOIDLAB_SEED").output().expect("binary runs")
}

fn run_ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "command {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

#[test]
fn validate_accepts_exported_builtin() {
    let dir = tempfile::tempdir().unwrap();
    let task_file = dir.path().join("example1.json");
    run_ok(&["export", "example1", "-o", task_file.to_str().unwrap()]);
    let stdout = run_ok(&["validate", task_file.to_str().unwrap()]);
    assert!(stdout.starts_with("ok:"), "{stdout}");
}

#[test]
fn validate_reports_dangling_successor() {
    let dir = tempfile::tempdir().unwrap();
    let task_file = dir.path().join("broken.json");
    let doc = run_ok(&["export", "example1"]);
    let mut value: serde_json::Value = serde_json::from_str(&doc).unwrap();
    value["transition"][1]["successors"]
        .as_array_mut()
        .unwrap()
        .push(serde_json::json!("ghost"));
    fs::write(&task_file, serde_json::to_string(&value).unwrap()).unwrap();
    let out = run(&["validate", task_file.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 1);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.matches("violation:").count(), 1, "{stdout}");
    assert!(stdout.contains("ghost"));
}

#[test]
fn validate_rejects_malformed_documents_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let task_file = dir.path().join("bad.json");
    fs::write(&task_file, "{\n  \"states\": [\n").unwrap();
    let out = run(&["validate", task_file.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2);
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("line"), "{stderr}");
    assert!(stderr.contains("column"), "{stderr}");
}

#[test]
fn missing_file_is_an_io_failure() {
    let out = run(&["validate", "/nonexistent/task.json"]);
    assert_eq!(exit_code(&out), 3);
}

#[test]
fn oracle_reports_worked_examples() {
    let stdout = run_ok(&["oracle", "example1"]);
    assert!(stdout.contains("f -> {}"), "{stdout}");
    assert!(stdout.contains("g -> {a}"), "{stdout}");
    assert!(stdout.contains("1: NO strategy"), "{stdout}");
    assert!(stdout.contains("2: strategy exists"), "{stdout}");

    let stdout = run_ok(&["oracle", "fig2b"]);
    assert!(stdout.contains("f1 -> {a}"), "{stdout}");

    let stdout = run_ok(&["oracle", "fig5-reconstruction"]);
    assert!(stdout.contains("1: NO strategy"), "{stdout}");
}

#[test]
fn oracle_rejects_unknown_start() {
    let out = run(&["oracle", "example1", "--start", "99"]);
    assert_eq!(exit_code(&out), 1);
}

#[test]
fn oracle_restricts_to_requested_start() {
    let stdout = run_ok(&["oracle", "example1", "--start", "2"]);
    assert!(stdout.contains("2: strategy exists"), "{stdout}");
    assert!(!stdout.contains("1: NO strategy"), "{stdout}");
}

#[test]
fn export_round_trip_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a.json");
    let second = dir.path().join("b.json");
    run_ok(&["export", "example1", "-o", first.to_str().unwrap()]);
    run_ok(&["export", first.to_str().unwrap(), "-o", second.to_str().unwrap()]);
    assert_eq!(fs::read(&first).unwrap(), fs::read(&second).unwrap());
}

#[test]
fn gen_is_deterministic_and_valid() {
    let a = run_ok(&["gen", "--seed", "7"]);
    let b = run_ok(&["gen", "--seed", "7"]);
    assert_eq!(a, b);
    let c = run_ok(&["gen", "--seed", "8"]);
    assert_ne!(a, c);

    let dir = tempfile::tempdir().unwrap();
    let task_file = dir.path().join("task.json");
    fs::write(&task_file, a).unwrap();
    run_ok(&["validate", task_file.to_str().unwrap()]);
}

#[test]
fn gen_honors_the_seed_env_fallback() {
    let explicit = run_ok(&["gen", "--seed", "31"]);
    let out = bin().args(["gen"]).env("AVOIDLAB_SEED", "31").output().unwrap();
    assert!(out.status.success());
    assert_eq!(explicit, String::from_utf8(out.stdout).unwrap());
}

#[test]
fn gen_rejects_out_of_range_shapes() {
    let out = run(&["gen", "--states", "50"]);
    assert_eq!(exit_code(&out), 1);
}

#[test]
fn grid_compiles_problems_into_valid_tasks() {
    let dir = tempfile::tempdir().unwrap();
    let problem = dir.path().join("problem.json");
    let task_file = dir.path().join("task.json");
    fs::write(
        &problem,
        r#"{"width": 2, "height": 2, "starts": [[0, 0]], "targets": [[2, 2]], "tau": 5}"#,
    )
    .unwrap();
    run_ok(&["grid", problem.to_str().unwrap(), "-o", task_file.to_str().unwrap()]);
    run_ok(&["validate", task_file.to_str().unwrap()]);
    // the grid: source prefix resolves the same compilation
    let stdout = run_ok(&["oracle", &format!("grid:{}", problem.to_str().unwrap())]);
    assert!(stdout.contains("strategy exists"), "{stdout}");
}

#[test]
fn grid_rejects_problems_violating_distance_assumptions() {
    let dir = tempfile::tempdir().unwrap();
    let problem = dir.path().join("problem.json");
    let task_file = dir.path().join("task.json");
    fs::write(
        &problem,
        r#"{"width": 2, "height": 2, "starts": [[0, 0]], "targets": [[2, 2]], "tau": 3}"#,
    )
    .unwrap();
    let out = run(&["grid", problem.to_str().unwrap(), "-o", task_file.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 1);
}

#[test]
fn qsim_header_and_short_run_behavior() {
    let stdout = run_ok(&["qsim", "--n", "800", "--steps", "20"]);
    let mut lines = stdout.lines();
    assert_eq!(lines.next().unwrap(), "step,q_1a,q_1b,reward,action,phase");
    assert_eq!(lines.count(), 20);

    // a run shorter than one phase keeps q_1b on one side of zero
    let q_1b: Vec<f64> = stdout
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert_eq!(avoidlab_core::qsim::sign_changes(q_1b), 0);
}

#[test]
fn qsim_rejects_bad_parameters() {
    let out = run(&["qsim", "--alpha", "0"]);
    assert_eq!(exit_code(&out), 1);
    let out = run(&["qsim", "--gamma", "1.0"]);
    assert_eq!(exit_code(&out), 1);
}

#[test]
fn learn_summary_is_consistent_with_its_traces() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("runs");
    run_ok(&[
        "learn",
        "example1",
        "--reps",
        "3",
        "--max-steps",
        "500",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    let runs = summary["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 3);
    for run_row in runs {
        let trace = fs::read_to_string(out_dir.join(run_row["trace_file"].as_str().unwrap())).unwrap();
        let removal_lines =
            trace.lines().filter(|l| l.contains(",removal_")).count() as u64;
        assert_eq!(removal_lines, run_row["removal_events"].as_u64().unwrap());

        let removed_pairs: u64 = trace
            .lines()
            .filter(|l| l.contains(",removal_"))
            .map(|l| l.split(',').nth(7).unwrap().split(';').count() as u64)
            .sum();
        assert_eq!(removed_pairs, run_row["removed_pairs"].as_u64().unwrap());
        assert_eq!(
            run_row["allowed_pairs"].as_u64().unwrap() + removed_pairs,
            2, // |F| * |A| of the worked task
        );

        let snapshot =
            fs::read_to_string(out_dir.join(run_row["removed_file"].as_str().unwrap())).unwrap();
        assert_eq!(snapshot.lines().count() as u64, removed_pairs);

        // CSV shape: header plus LF endings only
        assert!(trace.starts_with("step,trial,event,state,action,successor,signal,removed_pairs,P_size\n"));
        assert!(!trace.contains('\r'));
    }
}

#[test]
fn learn_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out_dir in [&a, &b] {
        run_ok(&[
            "learn",
            "example1",
            "--seed",
            "5",
            "--reps",
            "2",
            "--signal-oracle",
            "bernoulli:0.7",
            "--out",
            out_dir.to_str().unwrap(),
        ]);
    }
    for name in ["summary.json", "run_000.csv", "run_001.csv", "run_000.removed.tsv"] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name} differs between identical invocations"
        );
    }
}

#[test]
fn learn_resumes_from_a_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    run_ok(&["learn", "example1", "--max-steps", "500", "--out", first.to_str().unwrap()]);
    let snapshot = first.join("run_000.removed.tsv");
    assert!(Path::new(&snapshot).exists());

    let resumed = dir.path().join("resumed");
    run_ok(&[
        "learn",
        "example1",
        "--max-steps",
        "200",
        "--resume",
        snapshot.to_str().unwrap(),
        "--out",
        resumed.to_str().unwrap(),
    ]);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(resumed.join("summary.json")).unwrap()).unwrap();
    let run_row = &summary["runs"][0];
    assert_eq!(run_row["removal_events"].as_u64().unwrap(), 0);
    assert_eq!(run_row["settle_step"].as_u64().unwrap(), 0);
}

#[test]
fn learn_rejects_unknown_signal_oracle() {
    let out = run(&["learn", "example1", "--signal-oracle", "sometimes"]);
    assert_eq!(exit_code(&out), 1);
}

#[test]
fn learn_settles_on_a_compiled_grid_task() {
    let dir = tempfile::tempdir().unwrap();
    let problem = dir.path().join("problem.json");
    fs::write(
        &problem,
        r#"{"width": 3, "height": 3, "starts": [[0, 0]], "targets": [[2, 2], [1, 3]], "tau": 9}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("runs");
    run_ok(&[
        "learn",
        &format!("grid:{}", problem.to_str().unwrap()),
        "--max-steps",
        "120000",
        "--restart-every",
        "60",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    let run_row = &summary["runs"][0];
    assert!(run_row["settle_step"].is_u64(), "run did not settle: {run_row}");
    assert_eq!(run_row["post_settle_signals"].as_u64().unwrap(), 0);
}
