//! End-to-end behavior of the `recourse` binary: exit codes, report
//! determinism, caching, and row selection.

use std::path::Path;
use std::process::{Command, Output};

use recourse_cli::commands::{parse_methods, Method};
use recourse_cli::report::{AuditReport, ExplainReport, SampleSizeReport, ScoreReport};

fn fixture(name: &str, file: &str) -> String {
    format!("{}/fixtures/{name}/{file}", env!("CARGO_MANIFEST_DIR"))
}

fn recourse(args: &[String]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_recourse")).args(args).output().expect("binary runs")
}

/// Build an invocation against one fixture directory plus extra flags.
fn invocation(cmd: &str, fixture_name: &str, extra: &[&str]) -> Vec<String> {
    let mut args = vec![
        cmd.to_string(),
        "--data".to_string(),
        fixture(fixture_name, "data.csv"),
        "--actions".to_string(),
        fixture(fixture_name, "actions.json"),
        "--model".to_string(),
        fixture(fixture_name, "model.json"),
    ];
    args.extend(extra.iter().map(|s| s.to_string()));
    args
}

fn run_ok(args: &[String]) -> String {
    let out = recourse(args);
    assert!(
        out.status.success(),
        "expected success for {args:?}, got {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf8 stdout")
}

fn run_err(args: &[String], expected_code: i32) -> String {
    let out = recourse(args);
    assert_eq!(
        out.status.code(),
        Some(expected_code),
        "expected exit {expected_code} for {args:?}\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stderr).expect("utf8 stderr")
}

#[test]
fn reports_are_byte_identical_across_runs() {
    for args in [
        invocation("score", "credit", &[]),
        invocation("audit", "credit", &["--seed", "9"]),
        invocation("explain", "credit", &["--method", "lime", "--seed", "3"]),
        invocation("score", "credit", &["--sample", "40", "--seed", "11", "--alpha", "0.1"]),
    ] {
        let first = run_ok(&args);
        let second = run_ok(&args);
        assert_eq!(first, second, "two runs of {args:?} differ");
    }
}

#[test]
fn cached_runs_reuse_entries_and_survive_corruption() {
    let cache = tempfile::tempdir().expect("tempdir");
    let cache_flag = cache.path().to_str().unwrap().to_string();
    let plain = run_ok(&invocation("score", "credit", &[]));
    let cached_args = invocation("score", "credit", &["--cache-dir", &cache_flag]);

    let first = run_ok(&cached_args);
    assert_eq!(plain, first, "caching must not change the report");

    let entries: Vec<_> = std::fs::read_dir(cache.path())
        .expect("cache root")
        .map(|e| e.expect("entry").path())
        .collect();
    assert_eq!(entries.len(), 1, "one directory per action spec");
    let spec_dir = &entries[0];
    let files: Vec<_> = std::fs::read_dir(spec_dir)
        .expect("spec dir")
        .map(|e| e.expect("entry").path())
        .collect();
    // four denied rows times four features
    assert_eq!(files.len(), 16, "unexpected cache population: {files:?}");

    let second = run_ok(&cached_args);
    assert_eq!(first, second, "cache hits changed the report");

    // corrupt every entry: the run treats them as misses and recomputes
    for file in &files {
        std::fs::write(file, "not a reachable-set table\n").expect("overwrite");
    }
    let third = run_ok(&cached_args);
    assert_eq!(first, third, "corrupt cache entries leaked into the report");
}

#[test]
fn cache_is_shared_across_models_with_one_action_spec() {
    // Same action spec and data, different model: the second run must reuse
    // the first run's entries (same keys), and both reports stay correct.
    let cache = tempfile::tempdir().expect("tempdir");
    let cache_flag = cache.path().to_str().unwrap().to_string();
    let args = invocation("score", "credit", &["--cache-dir", &cache_flag]);
    run_ok(&args);
    let spec_dirs: Vec<_> =
        std::fs::read_dir(cache.path()).unwrap().map(|e| e.unwrap().path()).collect();
    let count_before = std::fs::read_dir(&spec_dirs[0]).unwrap().count();

    // an alternative model over the same feature space: deny everyone
    let alt_model = cache.path().join("alt_model.json");
    std::fs::write(
        &alt_model,
        r#"{"type":"linear","coefficients":{"savings":1},"intercept":0,"threshold":100}"#,
    )
    .unwrap();
    let alt_args = vec![
        "score".to_string(),
        "--data".to_string(),
        fixture("credit", "data.csv"),
        "--actions".to_string(),
        fixture("credit", "actions.json"),
        "--model".to_string(),
        alt_model.to_str().unwrap().to_string(),
        "--cache-dir".to_string(),
        cache_flag.clone(),
    ];
    let report: ScoreReport = serde_json::from_str(&run_ok(&alt_args)).unwrap();
    assert_eq!(report.n_denied, 6, "the alternative model denies every row");

    let count_after = std::fs::read_dir(&spec_dirs[0]).unwrap().count();
    // 6 denied rows x 4 features, minus the 16 entries already present for
    // the 4 rows the first model denied
    assert_eq!(count_after, 24, "cache should grow only by the new rows");
    assert!(count_after > count_before);
}

#[test]
fn row_selector_limits_the_explain_report() {
    let args = invocation("explain", "age_savings", &["--rows", "3"]);
    let report: ExplainReport = serde_json::from_str(&run_ok(&args)).unwrap();
    assert_eq!(report.rows.len(), 1);
    assert_eq!(report.rows[0].row, 3);

    let args = invocation("explain", "age_savings", &["--rows", "1-2"]);
    let report: ExplainReport = serde_json::from_str(&run_ok(&args)).unwrap();
    assert_eq!(report.rows.iter().map(|r| r.row).collect::<Vec<_>>(), vec![1, 2]);

    for bad in ["0", "9", "2-1", "x", ""] {
        let args = invocation("explain", "age_savings", &["--rows", bad]);
        run_err(&args, 2);
    }
}

#[test]
fn validation_failures_exit_2() {
    let cases: Vec<Vec<String>> = vec![
        invocation("explain", "credit", &["--method", "bogus"]),
        invocation("score", "credit", &["--alpha", "1.5"]),
        invocation("score", "credit", &["--alpha", "0"]),
        invocation("score", "credit", &["--sample", "0"]),
        // data columns that do not match the declared features
        vec![
            "score".into(),
            "--data".into(),
            fixture("credit", "data.csv"),
            "--actions".into(),
            fixture("ladders", "actions.json"),
            "--model".into(),
            fixture("ladders", "model.json"),
        ],
        vec![
            "score".into(),
            "--data".into(),
            "no_such_file.csv".into(),
            "--actions".into(),
            fixture("credit", "actions.json"),
            "--model".into(),
            fixture("credit", "model.json"),
        ],
        vec!["samplesize".into(), "--half-width".into(), "0".into()],
        vec!["samplesize".into(), "--half-width".into(), "0.05".into(), "--regime".into(), "middling".into()],
    ];
    for args in cases {
        run_err(&args, 2);
    }
    // a usage error from the argument parser also exits 2
    let out = recourse(&["score".to_string()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn starved_sampling_exits_3() {
    // One-hot pair whose only admissible completion needs the frozen member
    // to move: every sampled proposal is rejected, exhausting the cap.
    let dir = tempfile::tempdir().expect("tempdir");
    let actions = dir.path().join("actions.json");
    std::fs::write(
        &actions,
        r#"{
  "features": [
    { "name": "hot", "type": "binary", "lb": 0, "ub": 1, "actionable": true },
    { "name": "alt", "type": "binary", "lb": 0, "ub": 1, "actionable": false }
  ],
  "constraints": [
    { "kind": "one_hot", "members": ["hot", "alt"] }
  ]
}"#,
    )
    .unwrap();
    let model = dir.path().join("model.json");
    std::fs::write(
        &model,
        r#"{"type":"linear","coefficients":{"hot":1},"intercept":0,"threshold":10}"#,
    )
    .unwrap();
    let data = dir.path().join("data.csv");
    std::fs::write(&data, "hot,alt,label\n1,0,0\n").unwrap();

    let args = vec![
        "score".to_string(),
        "--data".to_string(),
        data.to_str().unwrap().to_string(),
        "--actions".to_string(),
        actions.to_str().unwrap().to_string(),
        "--model".to_string(),
        model.to_str().unwrap().to_string(),
        "--sample".to_string(),
        "5".to_string(),
    ];
    let stderr = run_err(&args, 3);
    assert!(
        stderr.contains("rejection"),
        "stderr should name the exhausted rejection cap: {stderr}"
    );

    // exact mode has no rejection loop: the same query simply reports an
    // empty reachable set and a zero score
    let exact_args = &args[..args.len() - 2];
    let report: ScoreReport = serde_json::from_str(&run_ok(exact_args)).unwrap();
    assert_eq!(report.rows[0].features[0].trials, 0);
    assert_eq!(report.rows[0].features[0].estimate, 0.0);
}

#[test]
fn samplesize_prints_the_count() {
    let out = run_ok(&[
        "samplesize".into(),
        "--alpha".into(),
        "0.01".into(),
        "--half-width".into(),
        "0.05".into(),
        "--regime".into(),
        "shortest".into(),
    ]);
    assert_eq!(out, "86\n");

    let out = run_ok(&["samplesize".into(), "--half-width".into(), "0.05".into()]);
    assert_eq!(out, "381\n", "default regime is widest, default alpha 0.05");

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("plan.json");
    run_ok(&[
        "samplesize".into(),
        "--half-width".into(),
        "0.05".into(),
        "--out".into(),
        path.to_str().unwrap().into(),
    ]);
    let report: SampleSizeReport =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(report.n, 381);
    assert_eq!(report.regime, "widest");
}

#[test]
fn out_flag_writes_exactly_the_stdout_document() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("audit.json");
    let stdout = run_ok(&invocation("audit", "credit", &[]));
    run_ok(&invocation("audit", "credit", &["--out", path.to_str().unwrap()]));
    let written = std::fs::read_to_string(&path).unwrap();
    assert_eq!(stdout, written);
    assert!(written.ends_with('\n'));
}

#[test]
fn explain_defaults_to_responsiveness_with_triage() {
    let report: ExplainReport =
        serde_json::from_str(&run_ok(&invocation("explain", "age_savings", &[]))).unwrap();
    assert_eq!(report.method, "resp");
    assert_eq!(report.k, 4);
    assert!(report.rows.iter().all(|r| r.triage.is_some()));
    // the two rows with a fixed prediction withhold the listing and escalate
    let fixed: Vec<_> = report
        .rows
        .iter()
        .filter(|r| r.triage.as_ref().unwrap().status == "fixed_prediction")
        .collect();
    assert_eq!(fixed.len(), 2);
    assert!(fixed.iter().all(|r| r.items.is_empty() && r.escalate));

    let lime: ExplainReport = serde_json::from_str(&run_ok(&invocation(
        "explain",
        "age_savings",
        &["--method", "lime"],
    )))
    .unwrap();
    assert_eq!(lime.method, "lime");
    assert!(lime.rows.iter().all(|r| r.triage.is_none()));
}

#[test]
fn audit_method_list_is_parsed_and_deduplicated() {
    assert_eq!(
        parse_methods("resp,shap,resp").unwrap(),
        vec![Method::Responsiveness, Method::Shapley]
    );
    assert!(parse_methods("").is_err());
    assert!(parse_methods("resp,,shap").is_err());
    assert!(parse_methods("gradients").is_err());
    for name in ["resp", "lime", "shap", "lime_aa", "shap_aa"] {
        assert_eq!(Method::parse(name).unwrap().name(), name);
    }

    let report: AuditReport = serde_json::from_str(&run_ok(&invocation(
        "audit",
        "credit",
        &["--method", "shap,resp"],
    )))
    .unwrap();
    let names: Vec<_> = report.methods.iter().map(|m| m.method.as_str()).collect();
    assert_eq!(names, vec!["shap", "resp"], "audit preserves the requested order");
    for row in report.rows.iter().filter(|r| r.denied) {
        let row_names: Vec<_> = row.explanations.iter().map(|e| e.method.as_str()).collect();
        assert_eq!(row_names, vec!["shap", "resp"]);
    }
}

#[test]
fn score_skips_rows_already_holding_the_target() {
    let report: ScoreReport =
        serde_json::from_str(&run_ok(&invocation("score", "credit", &[]))).unwrap();
    assert_eq!(report.n_rows, 6);
    assert_eq!(report.n_denied, 4);
    let rows: Vec<_> = report.rows.iter().map(|r| r.row).collect();
    assert_eq!(rows, vec![1, 2, 3, 4], "rows 5 and 6 are already approved");
    assert!(Path::new(&fixture("credit", "data.csv")).exists());
}
