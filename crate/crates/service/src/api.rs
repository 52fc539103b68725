use std::sync::Arc;

use appraisal_core::agreement::{write_judgments, Setting};
use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;

use crate::error::{Result, ServiceError};
use crate::session::{Ack, CorpusInfo, NextItem, SessionInfo, SessionManager};

pub type AppState = Arc<SessionManager>;

#[derive(Debug, Deserialize)]
pub struct CreateSession {
    pub annotator: String,
    pub corpus: String,
    pub setting: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_seed() -> u64 {
    1
}

#[derive(Debug, Deserialize)]
pub struct SubmitJudgment {
    pub instance_id: String,
    /// Seven booleans: attention, certainty, effort, pleasantness,
    /// responsibility, control, circumstance.
    pub answers: Vec<bool>,
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/corpora", get(list_corpora))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(session_info))
        .route("/sessions/{id}/next", get(next_item))
        .route("/sessions/{id}/judgments", post(submit_judgment))
        .route("/sessions/{id}/export", get(export_session))
        .fallback(
            |uri: axum::http::Uri| async move { ServiceError::NotFound(uri.path().to_string()) },
        )
        .with_state(state)
}

fn body<T>(payload: std::result::Result<Json<T>, JsonRejection>) -> Result<T> {
    payload
        .map(|Json(v)| v)
        .map_err(|e| ServiceError::BadRequest(e.body_text()))
}

async fn list_corpora(State(m): State<AppState>) -> Json<Vec<CorpusInfo>> {
    Json(m.corpora())
}

async fn create_session(
    State(m): State<AppState>,
    payload: std::result::Result<Json<CreateSession>, JsonRejection>,
) -> Result<(StatusCode, Json<SessionInfo>)> {
    let req = body(payload)?;
    let setting: Setting = req
        .setting
        .parse()
        .map_err(|_| ServiceError::InvalidSetting(req.setting.clone()))?;
    let info = m.create_session(&req.annotator, &req.corpus, setting, req.seed)?;
    Ok((StatusCode::CREATED, Json(info)))
}

async fn session_info(
    State(m): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<SessionInfo>> {
    Ok(Json(m.session_info(&id)?))
}

async fn next_item(State(m): State<AppState>, Path(id): Path<String>) -> Result<Json<NextItem>> {
    Ok(Json(m.next_item(&id)?))
}

async fn submit_judgment(
    State(m): State<AppState>,
    Path(id): Path<String>,
    payload: std::result::Result<Json<SubmitJudgment>, JsonRejection>,
) -> Result<Json<Ack>> {
    let req = body(payload)?;
    Ok(Json(m.submit_judgment(
        &id,
        &req.instance_id,
        &req.answers,
    )?))
}

async fn export_session(
    State(m): State<AppState>,
    Path(id): Path<String>,
) -> Result<impl IntoResponse> {
    let judgments = m.export_session(&id)?;
    let mut out = Vec::new();
    write_judgments(&mut out, &judgments)?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], out))
}
