//! Annotation service: hands out instances to annotators one at a time,
//! hides the writer's emotion under EmoHide, and stores judgments in an
//! append-only log.
//!
//! The HTTP surface is built by [`api::router`]:
//!
//! | method | path | |
//! |---|---|---|
//! | `GET` | `/corpora` | loaded corpora |
//! | `POST` | `/sessions` | `{annotator, corpus, setting, seed?}` |
//! | `GET` | `/sessions/{id}/next` | next item or `{done: true}` |
//! | `POST` | `/sessions/{id}/judgments` | `{instance_id, answers: [bool; 7]}` |
//! | `GET` | `/sessions/{id}/export` | JSONL, presentation order |
//!
//! Errors are `{code, message}` with a matching status.

pub mod api;
pub mod error;
pub mod session;
pub mod store;

use std::net::SocketAddr;
use std::sync::Arc;

pub use error::{Result, ServiceError};
pub use session::{Clock, FixedClock, NextItem, SessionManager, SystemClock};
pub use store::{AnnotationSession, Store};

/// Serves the API until Ctrl-C.
pub async fn serve(manager: SessionManager, addr: SocketAddr) -> std::io::Result<()> {
    let app = api::router(Arc::new(manager));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
