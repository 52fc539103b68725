use std::path::PathBuf;

use crate::schema::AppraisalSchema;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unknown corpus format `{0}` (expected one of isear_tsv, tec, blogs, jsonl)")]
    UnknownFormat(String),

    #[error("{format}: row {row}: {rule}")]
    MalformedRow {
        format: &'static str,
        row: usize,
        rule: String,
    },

    #[error("no instances")]
    NoInstances,

    #[error("duplicate instance id `{0}`")]
    DuplicateId(String),

    #[error("unmaskable: instance `{0}` has no emotion token or placeholder")]
    Unmaskable(String),

    #[error("class `{class}` has {available} instances, {required} required")]
    ClassTooSmall {
        class: String,
        available: usize,
        required: usize,
    },

    #[error("no appraisal rule for emotion `{0}`")]
    NoAppraisalRule(String),

    #[error("schema mismatch: expected {expected}, found {found}")]
    SchemaMismatch {
        expected: AppraisalSchema,
        found: AppraisalSchema,
    },

    #[error("{schema} vectors have {expected} dimensions, got {found}")]
    Arity {
        schema: AppraisalSchema,
        expected: usize,
        found: usize,
    },

    #[error("mapping file: {0}")]
    Mapping(String),

    #[error("no mappable instances in corpus `{0}`")]
    NothingMappable(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty input")]
    Empty,

    #[error("instance sets differ: only in first {only_a:?}, only in second {only_b:?}")]
    InstanceSetsDiffer {
        only_a: Vec<String>,
        only_b: Vec<String>,
    },

    #[error("instance id mismatch: {0}")]
    InstanceMismatch(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("judgment for `{instance}` has setting {found}, expected {expected}")]
    SettingMismatch {
        instance: String,
        expected: String,
        found: String,
    },

    #[error("corpus has {size} instances, at least {required} needed")]
    CorpusTooSmall { size: usize, required: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("task `{task}` needs {needs}: instance `{instance}` has none")]
    TaskLabel {
        task: String,
        needs: &'static str,
        instance: String,
    },

    #[error("model file: {0}")]
    Model(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
