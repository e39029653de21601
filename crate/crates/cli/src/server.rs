//! `POST /v1/sessions`: accepts a canonical JSON-lines body and appends the
//! valid trials to `<out>/<session_id>.trials.jsonl`.
//!
//! Appends to one session file are serialized by a per-session lock and
//! written with a single call, so concurrent uploads never interleave lines
//! within a file.

use std::collections::{BTreeMap, HashMap};
use std::future::Future;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use antasid::ingest::{parse_canonical, Severity};
use antasid::trial::Trial;
use antasid::Error;
use axum::extract::{DefaultBodyLimit, State};
use axum::http::StatusCode;
use axum::routing::post;
use axum::{Json, Router};
use serde::Serialize;
use tokio::io::AsyncWriteExt;

const MAX_BODY_BYTES: usize = 64 * 1024 * 1024;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UploadResponse {
    pub accepted: usize,
    pub rejected: usize,
    pub diagnostics: Vec<String>,
}

#[derive(Clone)]
pub struct Collector {
    out_dir: PathBuf,
    strict: bool,
    locks: Arc<Mutex<HashMap<String, Arc<tokio::sync::Mutex<()>>>>>,
}

impl Collector {
    pub fn new(out_dir: impl Into<PathBuf>, strict: bool) -> Self {
        Self {
            out_dir: out_dir.into(),
            strict,
            locks: Arc::default(),
        }
    }

    fn lock_for(&self, file: &str) -> Arc<tokio::sync::Mutex<()>> {
        self.locks
            .lock()
            .expect("lock table poisoned")
            .entry(file.to_string())
            .or_default()
            .clone()
    }
}

/// File stem for a session id: characters outside `[A-Za-z0-9._-]` become
/// `_`, and a leading dot is escaped so no hidden or relative names arise.
pub fn session_file_stem(session_id: &str) -> String {
    let mut s: String = session_id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') {
                c
            } else {
                '_'
            }
        })
        .collect();
    if s.starts_with('.') {
        s.insert(0, '_');
    }
    s
}

pub fn router(collector: Collector) -> Router {
    Router::new()
        .route("/v1/sessions", post(upload))
        .layer(DefaultBodyLimit::max(MAX_BODY_BYTES))
        .with_state(collector)
}

async fn upload(State(c): State<Collector>, body: String) -> (StatusCode, Json<UploadResponse>) {
    let bad = |rejected, diagnostics| {
        (
            StatusCode::BAD_REQUEST,
            Json(UploadResponse {
                accepted: 0,
                rejected,
                diagnostics,
            }),
        )
    };
    let outcome = match parse_canonical(&body, c.strict) {
        Ok(o) => o,
        Err(e @ Error::Parse { .. }) => return bad(1, vec![e.to_string()]),
        Err(e) => return bad(0, vec![e.to_string()]),
    };
    let diagnostics: Vec<String> = outcome.diagnostics.iter().map(|d| d.to_string()).collect();
    let rejected = outcome
        .diagnostics
        .iter()
        .filter(|d| d.severity == Severity::Error)
        .count();
    let trials = outcome.dataset.trials;
    if trials.is_empty() {
        return bad(rejected, diagnostics);
    }

    let mut by_session: BTreeMap<String, Vec<&Trial>> = BTreeMap::new();
    for t in &trials {
        by_session.entry(session_file_stem(&t.session_id)).or_default().push(t);
    }
    for (stem, group) in by_session {
        let mut text = String::new();
        for t in group {
            text.push_str(&serde_json::to_string(t).expect("trial serializes"));
            text.push('\n');
        }
        let lock = c.lock_for(&stem);
        let _guard = lock.lock().await;
        let path = c.out_dir.join(format!("{stem}.trials.jsonl"));
        let written = async {
            let mut f = tokio::fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(&path)
                .await?;
            f.write_all(text.as_bytes()).await?;
            f.flush().await
        }
        .await;
        if let Err(e) = written {
            return (
                StatusCode::INTERNAL_SERVER_ERROR,
                Json(UploadResponse {
                    accepted: 0,
                    rejected,
                    diagnostics: vec![format!("{}: {e}", path.display())],
                }),
            );
        }
    }
    (
        StatusCode::OK,
        Json(UploadResponse {
            accepted: trials.len(),
            rejected,
            diagnostics,
        }),
    )
}

/// Serves until `shutdown` resolves, then finishes in-flight requests.
pub async fn serve(
    listener: tokio::net::TcpListener,
    collector: Collector,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(collector))
        .with_graceful_shutdown(shutdown)
        .await
}
