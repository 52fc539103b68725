use std::path::PathBuf;

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;

pub type Result<T, E = ServiceError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("unknown corpus `{0}`")]
    UnknownCorpus(String),
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("annotator id must not be empty")]
    EmptyAnnotator,
    #[error("corpus `{0}` has no instances")]
    EmptyCorpus(String),
    #[error("setting `{0}` cannot be annotated manually; use emohide or emovis")]
    InvalidSetting(String),
    #[error("expected a judgment for {expected}, got `{found}`")]
    OutOfOrder { expected: String, found: String },
    #[error("expected {expected} answers, got {found}")]
    Arity { expected: usize, found: usize },
    #[error("no endpoint at `{0}`")]
    NotFound(String),
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("storage error at {path}: {source}")]
    Storage {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt store at {path}: {message}")]
    Corrupt { path: PathBuf, message: String },
    #[error(transparent)]
    Core(#[from] appraisal_core::Error),
}

impl ServiceError {
    pub(crate) fn storage(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ServiceError::Storage {
            path: path.into(),
            source,
        }
    }

    /// Stable machine-readable code used in error payloads.
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::UnknownCorpus(_) => "unknown_corpus",
            ServiceError::UnknownSession(_) => "unknown_session",
            ServiceError::EmptyAnnotator => "empty_annotator",
            ServiceError::EmptyCorpus(_) => "empty_corpus",
            ServiceError::InvalidSetting(_) => "invalid_setting",
            ServiceError::OutOfOrder { .. } => "out_of_order",
            ServiceError::Arity { .. } => "arity",
            ServiceError::NotFound(_) => "not_found",
            ServiceError::BadRequest(_) => "bad_request",
            ServiceError::Storage { .. } | ServiceError::Corrupt { .. } => "storage",
            ServiceError::Core(_) => "internal",
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::UnknownCorpus(_)
            | ServiceError::UnknownSession(_)
            | ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::EmptyAnnotator
            | ServiceError::EmptyCorpus(_)
            | ServiceError::InvalidSetting(_)
            | ServiceError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::OutOfOrder { .. } => StatusCode::CONFLICT,
            ServiceError::Arity { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::Storage { .. } | ServiceError::Corrupt { .. } | ServiceError::Core(_) => {
                StatusCode::INTERNAL_SERVER_ERROR
            }
        }
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    code: &'a str,
    message: String,
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = self.status();
        if status.is_server_error() {
            log::error!("{self}");
        }
        let body = ErrorBody {
            code: self.code(),
            message: self.to_string(),
        };
        (status, Json(body)).into_response()
    }
}
