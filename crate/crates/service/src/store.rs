//! On-disk layout under one root directory:
//!
//! ```text
//! sessions.json              compacted index, rewritten on every change
//! judgments/<session>.jsonl  every submission, append-only
//! audit.jsonl                one entry per replaced judgment
//! ```

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use appraisal_core::agreement::{
    latest_by_instance, read_judgments, write_judgments, Judgment, Setting,
};
use appraisal_core::schema::AppraisalVector;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ServiceError};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationSession {
    pub session_id: String,
    pub annotator: String,
    pub setting: Setting,
    pub corpus: String,
    pub seed: u64,
    /// Instance ids in presentation order.
    pub order: Vec<String>,
    pub cursor: usize,
    pub created_at: u64,
}

#[derive(Serialize, Deserialize, Default)]
struct Index {
    sessions: Vec<AnnotationSession>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub session_id: String,
    pub instance_id: String,
    pub previous: AppraisalVector,
    pub replacement: AppraisalVector,
    pub timestamp: u64,
}

#[derive(Clone, Debug)]
pub struct Store {
    root: PathBuf,
}

impl Store {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        let judgments = root.join("judgments");
        fs::create_dir_all(&judgments).map_err(|e| ServiceError::storage(&judgments, e))?;
        Ok(Store { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn index_path(&self) -> PathBuf {
        self.root.join("sessions.json")
    }

    fn judgments_path(&self, session_id: &str) -> PathBuf {
        self.root
            .join("judgments")
            .join(format!("{session_id}.jsonl"))
    }

    pub fn load_sessions(&self) -> Result<Vec<AnnotationSession>> {
        let path = self.index_path();
        if !path.exists() {
            return Ok(Vec::new());
        }
        let file = File::open(&path).map_err(|e| ServiceError::storage(&path, e))?;
        let index: Index =
            serde_json::from_reader(BufReader::new(file)).map_err(|e| ServiceError::Corrupt {
                path: path.clone(),
                message: e.to_string(),
            })?;
        Ok(index.sessions)
    }

    /// Replaces the index atomically (write to a temporary file, then rename).
    pub fn write_sessions(&self, sessions: &[AnnotationSession]) -> Result<()> {
        let path = self.index_path();
        let tmp = self.root.join("sessions.json.tmp");
        let index = Index {
            sessions: sessions.to_vec(),
        };
        let bytes = serde_json::to_vec_pretty(&index).expect("index serializes");
        fs::write(&tmp, bytes).map_err(|e| ServiceError::storage(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| ServiceError::storage(&path, e))
    }

    pub fn append_judgment(&self, session_id: &str, judgment: &Judgment) -> Result<()> {
        let path = self.judgments_path(session_id);
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| ServiceError::storage(&path, e))?;
        let mut line = serde_json::to_vec(judgment).expect("judgment serializes");
        line.push(b'\n');
        file.write_all(&line)
            .map_err(|e| ServiceError::storage(&path, e))
    }

    pub fn append_audit(&self, entry: &AuditEntry) -> Result<()> {
        let path = self.root.join("audit.jsonl");
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| ServiceError::storage(&path, e))?;
        let mut line = serde_json::to_vec(entry).expect("audit entry serializes");
        line.push(b'\n');
        file.write_all(&line)
            .map_err(|e| ServiceError::storage(&path, e))
    }

    /// Every submission for a session, in arrival order.
    pub fn judgments(&self, session_id: &str) -> Result<Vec<Judgment>> {
        let path = self.judgments_path(session_id);
        if !path.exists() {
            return Ok(Vec::new());
        }
        let file = File::open(&path).map_err(|e| ServiceError::storage(&path, e))?;
        read_judgments(BufReader::new(file)).map_err(|e| ServiceError::Corrupt {
            path,
            message: e.to_string(),
        })
    }

    pub fn audit_log(&self) -> Result<Vec<AuditEntry>> {
        let path = self.root.join("audit.jsonl");
        if !path.exists() {
            return Ok(Vec::new());
        }
        let text = fs::read_to_string(&path).map_err(|e| ServiceError::storage(&path, e))?;
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                serde_json::from_str(l).map_err(|e| ServiceError::Corrupt {
                    path: path.clone(),
                    message: e.to_string(),
                })
            })
            .collect()
    }

    /// The current judgment per judged instance, in presentation order.
    pub fn export(&self, session_id: &str) -> Result<Vec<Judgment>> {
        let session = self
            .load_sessions()?
            .into_iter()
            .find(|s| s.session_id == session_id)
            .ok_or_else(|| ServiceError::UnknownSession(session_id.to_string()))?;
        let all = self.judgments(session_id)?;
        Ok(ordered_latest(&session.order, &all))
    }

    pub fn export_jsonl(&self, session_id: &str) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        write_judgments(&mut out, &self.export(session_id)?)?;
        Ok(out)
    }
}

pub(crate) fn ordered_latest(order: &[String], all: &[Judgment]) -> Vec<Judgment> {
    let latest: BTreeMap<&str, &Judgment> = latest_by_instance(all);
    order
        .iter()
        .filter_map(|id| latest.get(id.as_str()).map(|j| (*j).clone()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use appraisal_core::schema::AppraisalSchema;

    fn judgment(id: &str, bit: bool, t: u64) -> Judgment {
        let v = AppraisalVector::new(AppraisalSchema::Split7, vec![bit; 7]).unwrap();
        Judgment::new("ann", id, Setting::EmoVis, v, t).unwrap()
    }

    fn session(order: &[&str]) -> AnnotationSession {
        AnnotationSession {
            session_id: "s1".into(),
            annotator: "ann".into(),
            setting: Setting::EmoVis,
            corpus: "c".into(),
            seed: 1,
            order: order.iter().map(|s| s.to_string()).collect(),
            cursor: 0,
            created_at: 0,
        }
    }

    #[test]
    fn index_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        assert!(store.load_sessions().unwrap().is_empty());
        let s = session(&["a", "b"]);
        store.write_sessions(std::slice::from_ref(&s)).unwrap();
        assert_eq!(store.load_sessions().unwrap(), vec![s]);
    }

    #[test]
    fn export_keeps_presentation_order_and_last_write() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        store.write_sessions(&[session(&["b", "a", "c"])]).unwrap();
        store
            .append_judgment("s1", &judgment("b", false, 1))
            .unwrap();
        store
            .append_judgment("s1", &judgment("a", false, 2))
            .unwrap();
        store
            .append_judgment("s1", &judgment("b", true, 3))
            .unwrap();
        let out = store.export("s1").unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].instance_id, "b");
        assert!(out[0].vector.values()[0]);
        assert_eq!(out[1].instance_id, "a");
        assert_eq!(store.judgments("s1").unwrap().len(), 3);
    }

    #[test]
    fn unknown_session_export_errors() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        assert!(matches!(
            store.export("nope"),
            Err(ServiceError::UnknownSession(_))
        ));
    }
}
