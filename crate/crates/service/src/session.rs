use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use appraisal_core::agreement::{Judgment, Setting};
use appraisal_core::corpus::{mask_emotion, Corpus, Instance, PLACEHOLDER};
use appraisal_core::schema::{AppraisalSchema, AppraisalVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Result, ServiceError};
use crate::store::{ordered_latest, AnnotationSession, AuditEntry, Store};

/// Number of answers per judgment: attention, certainty, effort,
/// pleasantness, responsibility, control, circumstance.
pub const ANSWERS: usize = 7;

pub trait Clock: Send + Sync {
    /// Seconds since the Unix epoch.
    fn now(&self) -> u64;
}

pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> u64 {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    }
}

/// Always returns the same instant.
pub struct FixedClock(pub u64);

impl Clock for FixedClock {
    fn now(&self) -> u64 {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Progress {
    /// Items judged so far.
    pub position: usize,
    pub total: usize,
}

/// What the annotator is shown next. Under EmoHide there is no `emotion`
/// key at all.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum NextItem {
    Item {
        instance_id: String,
        text: String,
        #[serde(skip_serializing_if = "Option::is_none")]
        emotion: Option<String>,
        progress: Progress,
    },
    Done {
        done: bool,
        progress: Progress,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Ack {
    pub session_id: String,
    pub instance_id: String,
    pub replaced: bool,
    pub progress: Progress,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SessionInfo {
    pub session_id: String,
    pub annotator: String,
    pub setting: Setting,
    pub corpus: String,
    pub seed: u64,
    pub cursor: usize,
    pub size: usize,
    pub created_at: u64,
}

impl From<&AnnotationSession> for SessionInfo {
    fn from(s: &AnnotationSession) -> Self {
        SessionInfo {
            session_id: s.session_id.clone(),
            annotator: s.annotator.clone(),
            setting: s.setting,
            corpus: s.corpus.clone(),
            seed: s.seed,
            cursor: s.cursor,
            size: s.order.len(),
            created_at: s.created_at,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CorpusInfo {
    pub name: String,
    pub size: usize,
}

struct SessionState {
    meta: AnnotationSession,
    /// Latest judgment per instance id.
    judged: BTreeMap<String, Judgment>,
}

/// Owns the loaded corpora and all sessions. Each session has its own
/// lock, so submissions to one session are serialized while different
/// sessions proceed independently.
pub struct SessionManager {
    corpora: BTreeMap<String, Arc<Corpus>>,
    sessions: RwLock<HashMap<String, Arc<Mutex<SessionState>>>>,
    index: Mutex<BTreeMap<String, AnnotationSession>>,
    store: Store,
    clock: Arc<dyn Clock>,
}

/// Presentation order for a corpus under a seed.
pub fn presentation_order(corpus: &Corpus, seed: u64) -> Vec<String> {
    let mut ids: Vec<String> = corpus.instances().iter().map(|i| i.id.clone()).collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    ids
}

/// Case-insensitive replacement of every occurrence of `needle`.
fn redact(text: &str, needle: &str) -> String {
    let needle: Vec<char> = needle.to_lowercase().chars().collect();
    if needle.is_empty() {
        return text.to_string();
    }
    let chars: Vec<char> = text.chars().collect();
    let lower = |c: char| c.to_lowercase().next().unwrap_or(c);
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    while i < chars.len() {
        let hit = i + needle.len() <= chars.len()
            && chars[i..i + needle.len()]
                .iter()
                .zip(&needle)
                .all(|(&c, &n)| lower(c) == n);
        if hit {
            out.push_str(PLACEHOLDER);
            i += needle.len();
        } else {
            out.push(chars[i]);
            i += 1;
        }
    }
    out
}

/// Text as shown under EmoHide: emotion words masked, and any leftover
/// occurrence of the label string (e.g. inside a longer word) redacted.
pub fn hidden_text(instance: &Instance) -> String {
    let text = match mask_emotion(instance) {
        Ok(masked) => masked.text,
        Err(_) => instance.text.clone(),
    };
    match &instance.emotion {
        Some(label) => redact(&text, label.as_str()),
        None => text,
    }
}

impl SessionManager {
    /// Opens the store and restores any sessions it already holds.
    pub fn open(
        corpora: impl IntoIterator<Item = Corpus>,
        store: Store,
        clock: Arc<dyn Clock>,
    ) -> Result<Self> {
        let corpora: BTreeMap<String, Arc<Corpus>> = corpora
            .into_iter()
            .map(|c| (c.name().to_string(), Arc::new(c)))
            .collect();
        let mut sessions = HashMap::new();
        let mut index = BTreeMap::new();
        for meta in store.load_sessions()? {
            if !corpora.contains_key(&meta.corpus) {
                log::warn!(
                    "session {} refers to corpus `{}`, which is not loaded",
                    meta.session_id,
                    meta.corpus
                );
            }
            let judged = store
                .judgments(&meta.session_id)?
                .into_iter()
                .map(|j| (j.instance_id.clone(), j))
                .collect();
            index.insert(meta.session_id.clone(), meta.clone());
            sessions.insert(
                meta.session_id.clone(),
                Arc::new(Mutex::new(SessionState { meta, judged })),
            );
        }
        Ok(SessionManager {
            corpora,
            sessions: RwLock::new(sessions),
            index: Mutex::new(index),
            store,
            clock,
        })
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn corpora(&self) -> Vec<CorpusInfo> {
        self.corpora
            .values()
            .map(|c| CorpusInfo {
                name: c.name().to_string(),
                size: c.len(),
            })
            .collect()
    }

    fn persist_meta(&self, meta: &AnnotationSession) -> Result<()> {
        let mut index = self.index.lock().expect("index lock");
        index.insert(meta.session_id.clone(), meta.clone());
        let all: Vec<AnnotationSession> = index.values().cloned().collect();
        self.store.write_sessions(&all)
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<SessionState>>> {
        self.sessions
            .read()
            .expect("sessions lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownSession(id.to_string()))
    }

    fn corpus(&self, name: &str) -> Result<&Arc<Corpus>> {
        self.corpora
            .get(name)
            .ok_or_else(|| ServiceError::UnknownCorpus(name.to_string()))
    }

    pub fn create_session(
        &self,
        annotator: &str,
        corpus: &str,
        setting: Setting,
        seed: u64,
    ) -> Result<SessionInfo> {
        let annotator = annotator.trim();
        if annotator.is_empty() {
            return Err(ServiceError::EmptyAnnotator);
        }
        if setting == Setting::Auto {
            return Err(ServiceError::InvalidSetting(setting.to_string()));
        }
        let c = self.corpus(corpus)?;
        if c.is_empty() {
            return Err(ServiceError::EmptyCorpus(corpus.to_string()));
        }
        let meta = AnnotationSession {
            session_id: uuid::Uuid::new_v4().to_string(),
            annotator: annotator.to_string(),
            setting,
            corpus: corpus.to_string(),
            seed,
            order: presentation_order(c, seed),
            cursor: 0,
            created_at: self.clock.now(),
        };
        self.persist_meta(&meta)?;
        let info = SessionInfo::from(&meta);
        log::info!(
            "session {} created for `{}` on `{}` ({}, seed {seed})",
            meta.session_id,
            meta.annotator,
            meta.corpus,
            meta.setting
        );
        self.sessions.write().expect("sessions lock").insert(
            meta.session_id.clone(),
            Arc::new(Mutex::new(SessionState {
                meta,
                judged: BTreeMap::new(),
            })),
        );
        Ok(info)
    }

    pub fn session_info(&self, id: &str) -> Result<SessionInfo> {
        let s = self.session(id)?;
        let state = s.lock().expect("session lock");
        Ok(SessionInfo::from(&state.meta))
    }

    pub fn next_item(&self, id: &str) -> Result<NextItem> {
        let s = self.session(id)?;
        let state = s.lock().expect("session lock");
        let meta = &state.meta;
        let progress = Progress {
            position: meta.cursor,
            total: meta.order.len(),
        };
        let Some(instance_id) = meta.order.get(meta.cursor) else {
            return Ok(NextItem::Done {
                done: true,
                progress,
            });
        };
        let corpus = self.corpus(&meta.corpus)?;
        let instance = corpus
            .get(instance_id)
            .ok_or_else(|| ServiceError::Corrupt {
                path: self.store.root().to_path_buf(),
                message: format!("instance `{instance_id}` missing from `{}`", meta.corpus),
            })?;
        Ok(match meta.setting {
            Setting::EmoVis => NextItem::Item {
                instance_id: instance.id.clone(),
                text: instance.text.clone(),
                emotion: instance.emotion.as_ref().map(|e| e.as_str().to_string()),
                progress,
            },
            _ => NextItem::Item {
                instance_id: instance.id.clone(),
                text: hidden_text(instance),
                emotion: None,
                progress,
            },
        })
    }

    /// Accepts answers for the current item, or replaces the judgment of
    /// an item judged earlier in this session.
    pub fn submit_judgment(&self, id: &str, instance_id: &str, answers: &[bool]) -> Result<Ack> {
        if answers.len() != ANSWERS {
            return Err(ServiceError::Arity {
                expected: ANSWERS,
                found: answers.len(),
            });
        }
        let s = self.session(id)?;
        let mut state = s.lock().expect("session lock");
        let current = state.meta.order.get(state.meta.cursor).cloned();
        let is_current = current.as_deref() == Some(instance_id);
        let previous = state.judged.get(instance_id).map(|j| j.vector.clone());
        if !is_current && previous.is_none() {
            return Err(ServiceError::OutOfOrder {
                expected: current
                    .map(|c| format!("`{c}`"))
                    .unwrap_or_else(|| "nothing (session is done)".into()),
                found: instance_id.to_string(),
            });
        }
        let vector = AppraisalVector::new(AppraisalSchema::Split7, answers.to_vec())?;
        let now = self.clock.now();
        let judgment = Judgment::new(
            state.meta.annotator.clone(),
            instance_id,
            state.meta.setting,
            vector.clone(),
            now,
        )?;
        self.store.append_judgment(id, &judgment)?;
        let replaced = match previous {
            Some(previous) if !is_current => {
                self.store.append_audit(&AuditEntry {
                    session_id: id.to_string(),
                    instance_id: instance_id.to_string(),
                    previous,
                    replacement: vector,
                    timestamp: now,
                })?;
                log::info!("session {id}: judgment for `{instance_id}` replaced");
                true
            }
            _ => false,
        };
        state.judged.insert(instance_id.to_string(), judgment);
        if is_current {
            state.meta.cursor += 1;
            self.persist_meta(&state.meta)?;
        }
        Ok(Ack {
            session_id: id.to_string(),
            instance_id: instance_id.to_string(),
            replaced,
            progress: Progress {
                position: state.meta.cursor,
                total: state.meta.order.len(),
            },
        })
    }

    /// Current judgments in presentation order.
    pub fn export_session(&self, id: &str) -> Result<Vec<Judgment>> {
        let s = self.session(id)?;
        let state = s.lock().expect("session lock");
        let all: Vec<Judgment> = state.judged.values().cloned().collect();
        Ok(ordered_latest(&state.meta.order, &all))
    }
}
