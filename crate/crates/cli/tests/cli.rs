mod common;

use std::fs;

use common::{appraise, core_fixture};

fn args(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

#[test]
fn reruns_are_byte_identical() {
    let checked = common::check_determinism().unwrap();
    assert_eq!(checked.len(), 15, "{checked:?}");
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = appraise(dir.path(), &args(&["kappa", "--bogus"]));
    assert_eq!(out.status.code(), Some(2));
    let out = appraise(dir.path(), &args(&["frobnicate"]));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = appraise(
        dir.path(),
        &args(&["kappa", "--a", "missing.jsonl", "--b", "missing.jsonl"]),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: "));
}

#[test]
fn autolabel_labels_every_instance() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = core_fixture("enisear_synthetic.tsv");
    let out = appraise(
        dir.path(),
        &args(&["--run-dir", "r", "autolabel", "--corpus", &corpus]),
    );
    assert!(out.status.success());
    let labels = fs::read_to_string(dir.path().join("r/labels.jsonl")).unwrap();
    assert_eq!(labels.lines().count(), 1001);
    assert!(fs::read(dir.path().join("r/labels.skipped.jsonl"))
        .unwrap()
        .is_empty());
}

#[test]
fn xval_reads_autolabel_output() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = core_fixture("enisear_synthetic.tsv");
    assert!(appraise(
        dir.path(),
        &args(&["--run-dir", "l", "autolabel", "--corpus", &corpus])
    )
    .status
    .success());
    let out = appraise(
        dir.path(),
        &args(&[
            "--run-dir",
            "x",
            "xval",
            "--task",
            "a2e",
            "--corpus",
            "l/labels.jsonl",
            "--seed",
            "4",
        ]),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("seed: 4"), "{stdout}");
    let v: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("x/xval.json")).unwrap()).unwrap();
    assert_eq!(v["report"]["micro"]["f1"], 1.0);
    assert_eq!(v["report"]["runs"], 30);
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("x/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seeds"]["seed"], 4);
    let outputs: Vec<&str> = manifest["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| o["path"].as_str().unwrap())
        .collect();
    assert_eq!(outputs, ["xval.json", "xval.tsv", "xval.folds.json"]);
}

#[test]
fn saved_fold_plan_reproduces_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = core_fixture("enisear_synthetic.tsv");
    let base = [
        "xval",
        "--task",
        "t2e",
        "--corpus",
        &corpus,
        "--repetitions",
        "1",
        "--folds",
        "4",
        "--seed",
        "8",
    ];
    let mut first = args(&["--run-dir", "a"]);
    first.extend(args(&base));
    assert!(appraise(dir.path(), &first).status.success());
    let mut second = args(&["--run-dir", "b"]);
    second.extend(args(&base));
    second.extend(args(&["--plan", "a/xval.folds.json"]));
    assert!(appraise(dir.path(), &second).status.success());
    assert_eq!(
        fs::read(dir.path().join("a/xval.json")).unwrap(),
        fs::read(dir.path().join("b/xval.json")).unwrap()
    );
}

#[test]
fn kappa_table_has_one_row_per_dimension_and_macro() {
    let dir = tempfile::tempdir().unwrap();
    let a = core_fixture("agreement/emohide_a1.jsonl");
    let b = core_fixture("agreement/emohide_a2.jsonl");
    assert!(appraise(
        dir.path(),
        &args(&["--run-dir", "k", "kappa", "--a", &a, "--b", &b])
    )
    .status
    .success());
    let tsv = fs::read_to_string(dir.path().join("k/kappa.tsv")).unwrap();
    let rows: Vec<Vec<&str>> = tsv.lines().map(|l| l.split('\t').collect()).collect();
    assert_eq!(rows[0], ["appraisal", "kappa", "degenerate"]);
    assert_eq!(rows.len(), 9);
    assert!(rows.iter().all(|r| r.len() == 3));
    assert_eq!(rows[8][0], "macro");
}

#[test]
fn relative_inputs_resolve_against_the_data_dir() {
    let data = tempfile::tempdir().unwrap();
    let cwd = tempfile::tempdir().unwrap();
    fs::copy(
        core_fixture("agreement/emovis_a1.jsonl"),
        data.path().join("a.jsonl"),
    )
    .unwrap();
    fs::copy(
        core_fixture("agreement/emovis_a2.jsonl"),
        data.path().join("b.jsonl"),
    )
    .unwrap();
    let out = std::process::Command::new(common::bin())
        .args(["kappa", "--a", "a.jsonl", "--b", "b.jsonl"])
        .current_dir(cwd.path())
        .env("APPRAISE_DATA_DIR", data.path())
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(data.path().join("runs/kappa/kappa.tsv").exists());
    assert!(data.path().join("runs/kappa/manifest.json").exists());
}
