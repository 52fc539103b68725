//! Helpers shared by the CLI integration tests and the acceptance runner.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::Arc;

use appraisal_core::agreement::Setting;
use appraisal_core::corpus::{load_corpus, CorpusFormat};
use appraisal_service::{FixedClock, SessionManager, Store};

pub fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_appraise"))
}

pub fn core_fixture(rel: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(rel)
        .display()
        .to_string()
}

pub fn service_fixture(rel: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../service/tests/fixtures")
        .join(rel)
        .display()
        .to_string()
}

pub fn appraise(cwd: &Path, args: &[String]) -> Output {
    Command::new(bin())
        .args(args)
        .current_dir(cwd)
        .env_remove("APPRAISE_DATA_DIR")
        .env_remove("RUST_LOG")
        .output()
        .expect("spawn appraise")
}

fn strings(args: &[&str]) -> Vec<String> {
    args.iter().map(|s| s.to_string()).collect()
}

/// A store with one session holding five judgments, for `export`.
pub fn seeded_store(root: &Path) -> (PathBuf, String) {
    let corpus = load_corpus(
        Path::new(&service_fixture("labeled.tsv")),
        CorpusFormat::IsearTsv,
    )
    .unwrap();
    let store_dir = root.join("store");
    let store = Store::open(&store_dir).unwrap();
    let m = SessionManager::open(vec![corpus], store, Arc::new(FixedClock(1_600_000_000))).unwrap();
    let info = m
        .create_session("ann1", "labeled", Setting::EmoHide, 4)
        .unwrap();
    let json = serde_json::to_value(&info).unwrap();
    let sid = json["session_id"].as_str().unwrap().to_string();
    for k in 0..5 {
        let next = serde_json::to_value(m.next_item(&sid).unwrap()).unwrap();
        let id = next["instance_id"].as_str().unwrap().to_string();
        let answers: Vec<bool> = (0..7).map(|d| (k + d) % 2 == 0).collect();
        m.submit_judgment(&sid, &id, &answers).unwrap();
    }
    (store_dir, sid)
}

/// Every batch command with arguments that only reference absolute inputs.
pub fn command_matrix(scratch: &Path) -> Vec<(String, Vec<String>)> {
    let corpus = core_fixture("enisear_synthetic.tsv");
    let vis_a = core_fixture("agreement/emovis_a1.jsonl");
    let vis_b = core_fixture("agreement/emovis_a2.jsonl");
    let hide_a = core_fixture("agreement/emohide_a1.jsonl");
    let hide_b = core_fixture("agreement/emohide_a2.jsonl");
    let full = core_fixture("agreement/emovis_full.jsonl");
    let (store, sid) = seeded_store(scratch);
    let store = store.display().to_string();
    let four = [
        "--vis-a", &vis_a, "--vis-b", &vis_b, "--hide-a", &hide_a, "--hide-b", &hide_b,
    ];
    let mut m: Vec<(&str, Vec<&str>)> = vec![
        ("ingest", vec!["ingest", "--corpus", &corpus]),
        ("autolabel", vec!["autolabel", "--corpus", &corpus]),
        (
            "sample",
            vec!["sample", "--corpus", &corpus, "--n", "70", "--seed", "9"],
        ),
        ("kappa", vec!["kappa", "--a", &vis_a, "--b", &vis_b]),
        (
            "distribution",
            vec!["distribution", "--corpus", &corpus, "--judgments", &full],
        ),
        (
            "train-t2a",
            vec!["train", "--task", "t2a", "--corpus", &corpus],
        ),
        (
            "train-t2e",
            vec!["train", "--task", "t2e", "--corpus", &corpus],
        ),
        (
            "train-a2e",
            vec!["train", "--task", "a2e", "--corpus", &corpus],
        ),
        (
            "xval-a2e",
            vec!["xval", "--task", "a2e", "--corpus", &corpus],
        ),
        (
            "xval-t2a-merged",
            vec![
                "xval",
                "--task",
                "t2a",
                "--corpus",
                &corpus,
                "--judgments",
                &full,
                "--merge",
                "--repetitions",
                "1",
                "--folds",
                "5",
            ],
        ),
        (
            "pipeline-eval",
            vec!["pipeline-eval", "--corpus", &corpus, "--repetitions", "1"],
        ),
        (
            "ensemble-eval",
            vec!["ensemble-eval", "--corpus", &corpus, "--repetitions", "1"],
        ),
        (
            "export",
            vec!["export", "--store", &store, "--session", &sid],
        ),
    ];
    let mut delta = vec!["delta"];
    delta.extend(four);
    let mut change = vec!["change-score"];
    change.extend(four);
    m.push(("delta", delta));
    m.push(("change-score", change));
    m.into_iter()
        .map(|(name, args)| (name.to_string(), strings(&args)))
        .collect()
}

/// File name → bytes for a run directory, with the manifest's timestamp removed.
pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        let mut bytes = fs::read(&path).unwrap();
        if name == "manifest.json" {
            let mut v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
            v.as_object_mut().unwrap().remove("created_at");
            bytes = serde_json::to_vec(&v).unwrap();
        }
        out.insert(name, bytes);
    }
    out
}

/// Runs each command twice from different working directories and compares
/// the run directories. Returns the names of commands checked.
pub fn check_determinism() -> Result<Vec<String>, String> {
    let scratch = tempfile::tempdir().unwrap();
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    let mut checked = Vec::new();
    for (name, args) in command_matrix(scratch.path()) {
        let mut full = vec!["--run-dir".to_string(), format!("runs/{name}")];
        full.extend(args);
        for cwd in [first.path(), second.path()] {
            let out = appraise(cwd, &full);
            if !out.status.success() {
                return Err(format!(
                    "{name} failed: {}",
                    String::from_utf8_lossy(&out.stderr)
                ));
            }
        }
        let a = snapshot(&first.path().join("runs").join(&name));
        let b = snapshot(&second.path().join("runs").join(&name));
        if !a.contains_key("manifest.json") || a.len() < 2 {
            return Err(format!(
                "{name}: expected artifacts and a manifest, got {:?}",
                a.keys()
            ));
        }
        if a != b {
            let differing: Vec<_> = a.keys().filter(|k| a.get(*k) != b.get(*k)).collect();
            return Err(format!("{name}: {differing:?} differ between reruns"));
        }
        checked.push(name);
    }
    Ok(checked)
}
