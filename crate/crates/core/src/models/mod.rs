//! Classifiers: text → appraisal, text → emotion, appraisal → emotion, the
//! text → appraisal → emotion pipeline and the oracle ensemble.
//!
//! Text models sit behind [`TextBackend`] so that a transformer can stand
//! in for the reference [`NgramLogisticBackend`]. The appraisal → emotion
//! network never sees text: [`pipeline_predict`] hands it only the
//! predicted vector.

mod features;
mod linear;
mod network;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub use features::{NgramHasher, SparseVec};
pub use linear::{
    train_text_appraisal, train_text_appraisal_traced, BinaryHead, MajorityBackend,
    NgramLogisticBackend, TextAppraisalModel, TextEmotionModel,
};
pub use network::{train_appraisal_emotion, AppraisalEmotionModel};

use crate::corpus::EmotionLabel;
use crate::error::{Error, Result};
use crate::eval::{multiclass_report, multiclass_report_with_labels, EvalReport};
use crate::schema::{AppraisalSchema, AppraisalVector};

/// Training hyper-parameters shared by all models.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Backend-specific settings, e.g. `lr`, `shuffle`, `aem_hidden`.
    #[serde(default)]
    pub options: BTreeMap<String, String>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 5,
            batch_size: 5,
            seed: 1,
            options: BTreeMap::new(),
        }
    }
}

impl TrainConfig {
    pub fn with_seed(seed: u64) -> Self {
        TrainConfig {
            seed,
            ..Default::default()
        }
    }

    pub fn with_option(mut self, key: &str, value: impl ToString) -> Self {
        self.options.insert(key.to_string(), value.to_string());
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config(format!(
                "epochs and batch_size must be ≥ 1 (got {} and {})",
                self.epochs, self.batch_size
            )));
        }
        Ok(())
    }

    fn option<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.options.get(key) {
            None => Ok(default),
            Some(raw) => raw
                .parse()
                .map_err(|_| Error::Config(format!("option `{key}`: cannot parse `{raw}`"))),
        }
    }
}

pub trait AppraisalPredictor: Send + Sync {
    fn schema(&self) -> AppraisalSchema;
    fn predict_appraisal(&self, text: &str) -> AppraisalVector;
}

pub trait EmotionPredictor: Send + Sync {
    fn predict_emotion(&self, text: &str) -> EmotionLabel;
}

/// A family of text classifiers that can be trained per fold.
pub trait TextBackend: Send + Sync {
    fn id(&self) -> &str;

    fn train_appraisal(
        &self,
        data: &[(&str, &AppraisalVector)],
        config: &TrainConfig,
    ) -> Result<Box<dyn AppraisalPredictor>>;

    fn train_emotion(
        &self,
        data: &[(&str, &EmotionLabel)],
        config: &TrainConfig,
    ) -> Result<Box<dyn EmotionPredictor>>;
}

pub fn predict_appraisal(model: &TextAppraisalModel, text: &str) -> AppraisalVector {
    model.predict(text)
}

/// Text → appraisal → emotion. The second stage sees only the vector.
pub fn pipeline_predict(
    tam: &dyn AppraisalPredictor,
    aem: &AppraisalEmotionModel,
    text: &str,
) -> Result<EmotionLabel> {
    if tam.schema() != aem.schema() {
        return Err(Error::SchemaMismatch {
            expected: aem.schema(),
            found: tam.schema(),
        });
    }
    aem.predict(&tam.predict_appraisal(text))
}

/// Scores two emotion classifiers as one that is right whenever either is.
///
/// Where both are wrong the text → emotion prediction is kept.
pub fn oracle_ensemble_eval(
    preds_te: &[EmotionLabel],
    preds_pipe: &[EmotionLabel],
    gold: &[EmotionLabel],
    labels: Option<&[EmotionLabel]>,
) -> Result<EvalReport> {
    for len in [preds_pipe.len(), gold.len()] {
        if len != preds_te.len() {
            return Err(Error::LengthMismatch {
                left: preds_te.len(),
                right: len,
            });
        }
    }
    let scored: Vec<EmotionLabel> = preds_te
        .iter()
        .zip(preds_pipe)
        .zip(gold)
        .map(|((te, pipe), g)| {
            if te == g || pipe == g {
                g.clone()
            } else {
                te.clone()
            }
        })
        .collect();
    match labels {
        Some(labels) => multiclass_report_with_labels(&scored, gold, labels),
        None => multiclass_report(&scored, gold),
    }
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile<T> {
    format_version: u32,
    kind: String,
    model: T,
}

pub(crate) fn save_model<T: Serialize>(path: &Path, kind: &str, model: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer(
        &mut w,
        &ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            kind: kind.to_string(),
            model,
        },
    )?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub(crate) fn load_model<T: DeserializeOwned>(path: &Path, kind: &str) -> Result<T> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let parsed: ModelFile<T> = serde_json::from_reader(BufReader::new(file))?;
    if parsed.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::Model(format!(
            "unsupported format version {}",
            parsed.format_version
        )));
    }
    if parsed.kind != kind {
        return Err(Error::Model(format!(
            "expected a `{kind}` model, file holds `{}`",
            parsed.kind
        )));
    }
    Ok(parsed.model)
}
