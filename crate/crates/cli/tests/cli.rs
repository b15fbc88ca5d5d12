//! End-to-end tests of the `logsentinel` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_logsentinel"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Synthesize a log and build a dataset into `dir`; returns the dataset path.
fn build_dataset(dir: &Path) -> PathBuf {
    let queries = fixture("queries.json");
    let log = dir.join("logs.jsonl");
    let data = dir.join("d.csv");
    assert!(
        run(&["synth", "--queries", s(&queries), "--out", s(&log), "--seed", "3"])
            .status
            .success()
    );
    assert!(
        run(&["build", "--log", s(&log), "--queries", s(&queries), "--out", s(&data)])
            .status
            .success()
    );
    data
}

#[test]
fn usage_errors_exit_one() {
    let out = run(&["select", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(
        run(&["evaluate", "--dataset", "x.csv", "--seeds", "9:1"]).status.code(),
        Some(1)
    );
    let threads = bin()
        .env("LOGSENTINEL_THREADS", "many")
        .args(["select", "--dataset", "x"])
        .output()
        .unwrap();
    assert_eq!(threads.status.code(), Some(1));
}

#[test]
fn help_and_version_exit_zero() {
    let help = run(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    let text = String::from_utf8_lossy(&help.stdout);
    for cmd in [
        "ingest",
        "extract",
        "build",
        "select",
        "project",
        "train",
        "evaluate",
        "automl",
        "report",
        "synth",
        "replay-script",
        "pipeline",
    ] {
        assert!(text.contains(cmd), "help lacks {cmd}");
    }
    assert_eq!(run(&["--version"]).status.code(), Some(0));
}

#[test]
fn data_errors_exit_two_and_name_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let missing = run(&["select", "--dataset", s(&dir.path().join("none.csv"))]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("select"));

    // No log record matches any query.
    let queries = dir.path().join("q.json");
    std::fs::write(&queries, r#"[{"text": "{\"a\": 1}", "label": 1}]"#).unwrap();
    let out = run(&[
        "build",
        "--log",
        s(&fixture("mongod_sample.log")),
        "--queries",
        s(&queries),
        "--out",
        s(&dir.path().join("d.csv")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("build"), "{err}");

    // A single-class dataset cannot be tested.
    let single = dir.path().join("single.json");
    std::fs::write(
        &single,
        r#"[{"text": "{\"username\": {\"$ne\": null}, \"password\": {\"$ne\": null}}", "label": 1}]"#,
    )
    .unwrap();
    let data = dir.path().join("s.csv");
    assert!(run(&[
        "build",
        "--log",
        s(&fixture("mongod_sample.log")),
        "--queries",
        s(&single),
        "--out",
        s(&data)
    ])
    .status
    .success());
    let out = run(&["select", "--dataset", s(&data)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("select"));
}

#[test]
fn ingest_counts_and_strict_mode() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.jsonl");
    let ok = run(&["ingest", "--log", s(&fixture("mongod_sample.log")), "--out", s(&out)]);
    assert!(ok.status.success());
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 1);
    assert!(String::from_utf8_lossy(&ok.stderr).contains("1 query records, 1 malformed"));
    let strict = run(&[
        "ingest",
        "--log",
        s(&fixture("mongod_sample.log")),
        "--out",
        s(&out),
        "--strict",
    ]);
    assert_eq!(strict.status.code(), Some(2));
}

#[test]
fn extract_single_filter() {
    let out = run(&["extract", "--filter", r#"{"user": {"$ne": null}}"#]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["$ne"], serde_json::json!(true));
    assert_eq!(run(&["extract"]).status.code(), Some(1));
}

#[test]
fn select_prints_report_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let data = build_dataset(dir.path());
    let out = run(&["select", "--dataset", s(&data), "--alpha", "0.01"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("| Variable | U Statistic | P-Value | Significant at 0.01 |"));
    assert!(text.contains("| planningTimeMicros |"));
    assert_eq!(
        run(&["select", "--dataset", s(&data), "--alpha", "1.5"]).status.code(),
        Some(1)
    );
}

#[test]
fn subcommands_are_idempotent_and_leave_inputs_alone() {
    let dir = tempfile::tempdir().unwrap();
    let data = build_dataset(dir.path());
    let reduced = dir.path().join("reduced.csv");
    assert!(run(&[
        "select",
        "--dataset",
        s(&data),
        "--reduced-out",
        s(&reduced),
        "--out",
        s(&dir.path().join("sel.md"))
    ])
    .status
    .success());
    let input_before = std::fs::read(&data).unwrap();

    let d = |n: &str| dir.path().join(n);
    let commands: Vec<(Vec<String>, PathBuf)> = vec![
        (
            vec![
                "project".into(),
                "--dataset".into(),
                s(&reduced).into(),
                "--method".into(),
                "pca".into(),
                "--out".into(),
                s(&d("p.csv")).into(),
                "--svg".into(),
                s(&d("p.svg")).into(),
            ],
            d("p.svg"),
        ),
        (
            vec![
                "project".into(),
                "--dataset".into(),
                s(&reduced).into(),
                "--method".into(),
                "tsne".into(),
                "--iterations".into(),
                "300".into(),
                "--out".into(),
                s(&d("t.csv")).into(),
            ],
            d("t.csv"),
        ),
        (
            vec![
                "train".into(),
                "--dataset".into(),
                s(&reduced).into(),
                "--family".into(),
                "random_forest".into(),
                "--hyperparameters".into(),
                r#"{"n_trees": 10}"#.into(),
                "--out".into(),
                s(&d("m.json")).into(),
            ],
            d("m.json"),
        ),
        (
            vec![
                "evaluate".into(),
                "--dataset".into(),
                s(&reduced).into(),
                "--seeds".into(),
                "1:2".into(),
                "--families".into(),
                "knn,decision_tree".into(),
                "--out".into(),
                s(&d("e.md")).into(),
                "--json-out".into(),
                s(&d("e.json")).into(),
            ],
            d("e.json"),
        ),
        (
            vec![
                "automl".into(),
                "--dataset".into(),
                s(&reduced).into(),
                "--budget".into(),
                "3600".into(),
                "--max-candidates".into(),
                "3".into(),
                "--out".into(),
                s(&d("a.json")).into(),
            ],
            d("a.json"),
        ),
        (
            vec![
                "replay-script".into(),
                "--queries".into(),
                s(&fixture("queries.json")).into(),
                "--out".into(),
                s(&d("replay.js")).into(),
            ],
            d("replay.js"),
        ),
    ];
    for (args, output) in &commands {
        let first = bin().args(args).output().unwrap();
        assert!(
            first.status.success(),
            "{args:?}: {}",
            String::from_utf8_lossy(&first.stderr)
        );
        let a = std::fs::read(output).unwrap();
        assert!(bin().args(args).status().unwrap().success());
        assert_eq!(a, std::fs::read(output).unwrap(), "{args:?} is not idempotent");
    }
    assert_eq!(std::fs::read(&data).unwrap(), input_before);

    // `report` re-renders the saved evaluation identically.
    let rendered = run(&["report", "--input", s(&d("e.json"))]);
    assert!(rendered.status.success());
    assert_eq!(rendered.stdout, std::fs::read(d("e.md")).unwrap());
    let csv = run(&["report", "--input", s(&d("e.json")), "--format", "csv"]);
    assert!(String::from_utf8_lossy(&csv.stdout).starts_with("id,model,accuracy,precision,recall,f1\n"));

    let model: serde_json::Value = serde_json::from_slice(&std::fs::read(d("m.json")).unwrap()).unwrap();
    assert_eq!(model["spec"]["family"], "random_forest");
    assert_eq!(model["spec"]["hyperparameters"]["n_trees"], 10);
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let data = build_dataset(dir.path());
    let eval = |threads: &str| {
        let out = bin()
            .env("LOGSENTINEL_THREADS", threads)
            .args([
                "evaluate",
                "--dataset",
                s(&data),
                "--seeds",
                "1:3",
                "--families",
                "random_forest,svm_rbf",
            ])
            .output()
            .unwrap();
        assert!(out.status.success());
        out.stdout
    };
    assert_eq!(eval("1"), eval("4"));
    assert_eq!(eval("0"), eval("4"));
}

#[test]
fn pipeline_flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(fixture("queries.json"), dir.path().join("queries.json")).unwrap();
    std::fs::write(
        dir.path().join("run.json"),
        r#"{"queries": "queries.json", "seeds": "1:2", "families": ["knn"], "projections": ["lda"], "svg": false, "budget_seconds": 0}"#,
    )
    .unwrap();
    let config = dir.path().join("run.json");
    let out = run(&[
        "pipeline",
        "--config",
        s(&config),
        "--out-dir",
        s(&dir.path().join("elsewhere")),
        "--k",
        "3",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let eval = std::fs::read_to_string(dir.path().join("elsewhere/evaluation.md")).unwrap();
    assert!(eval.contains(r#""k":3"#));
    assert!(dir.path().join("elsewhere/projection_lda.csv").exists());
    assert!(!dir.path().join("elsewhere/projection_pca.csv").exists());

    std::fs::write(
        dir.path().join("bad.json"),
        r#"{"queries": "queries.json", "alpah": 0.1}"#,
    )
    .unwrap();
    assert_eq!(
        run(&["pipeline", "--config", s(&dir.path().join("bad.json"))])
            .status
            .code(),
        Some(1)
    );
}
