//! HTTP service: `POST /v1/classify` and `GET /v1/health`.
//!
//! The listener comes up before the model has finished loading; until then
//! both endpoints answer 503. Once installed the model is never mutated.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{DefaultBodyLimit, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use catmat_core::persist;
use catmat_core::suggest::{self, ClassLabels, SuggestError};
use catmat_core::MulticlassModel;
use serde::Deserialize;
use serde_json::json;

use crate::commands::load_labels;
use crate::CliError;

/// Request bodies above this size are rejected with 413.
pub const BODY_LIMIT: usize = 64 * 1024;

pub struct ServedModel {
    pub model: MulticlassModel,
    pub labels: ClassLabels,
    pub version: String,
}

pub struct AppState {
    started: Instant,
    served: OnceLock<ServedModel>,
}

impl AppState {
    pub fn new() -> Arc<AppState> {
        Arc::new(AppState {
            started: Instant::now(),
            served: OnceLock::new(),
        })
    }

    pub fn with_model(served: ServedModel) -> Arc<AppState> {
        let state = AppState::new();
        state.install(served);
        state
    }

    /// Makes the model visible to request handlers. Returns false if a model
    /// was already installed; the first one stays.
    pub fn install(&self, served: ServedModel) -> bool {
        self.served.set(served).is_ok()
    }

    pub fn served(&self) -> Option<&ServedModel> {
        self.served.get()
    }
}

#[derive(Debug, Deserialize)]
struct ClassifyRequest {
    #[serde(default)]
    description: String,
    #[serde(default)]
    k: Option<usize>,
}

#[derive(Debug, Deserialize)]
struct ClassifyQuery {
    k: Option<usize>,
}

fn error_response(status: StatusCode, code: &str, message: impl Into<String>) -> Response {
    let body = json!({ "error": code, "message": message.into() });
    (status, Json(body)).into_response()
}

fn loading() -> Response {
    error_response(
        StatusCode::SERVICE_UNAVAILABLE,
        "model_loading",
        "model is still loading",
    )
}

fn json_rejection(rejection: JsonRejection) -> Response {
    let code = match &rejection {
        JsonRejection::JsonSyntaxError(_) => "invalid_json",
        JsonRejection::JsonDataError(_) => "invalid_request",
        JsonRejection::MissingJsonContentType(_) => "unsupported_media_type",
        _ if rejection.status() == StatusCode::PAYLOAD_TOO_LARGE => "payload_too_large",
        _ => "bad_request",
    };
    let status = match &rejection {
        JsonRejection::JsonSyntaxError(_) => StatusCode::BAD_REQUEST,
        _ => rejection.status(),
    };
    error_response(status, code, rejection.body_text())
}

async fn classify(
    State(state): State<Arc<AppState>>,
    query: Result<Query<ClassifyQuery>, QueryRejection>,
    body: Result<Json<ClassifyRequest>, JsonRejection>,
) -> Response {
    let Some(served) = state.served() else {
        return loading();
    };
    let query = match query {
        Ok(Query(q)) => q,
        Err(e) => return error_response(StatusCode::UNPROCESSABLE_ENTITY, "invalid_k", e.body_text()),
    };
    let request = match body {
        Ok(Json(r)) => r,
        Err(e) => return json_rejection(e),
    };
    let k = request.k.or(query.k);
    match suggest::suggest(&served.model, &served.labels, &served.version, &request.description, k) {
        Ok(response) => Json(response).into_response(),
        Err(e @ (SuggestError::EmptyDescription | SuggestError::InvalidK)) => {
            error_response(StatusCode::UNPROCESSABLE_ENTITY, e.code(), e.to_string())
        }
    }
}

async fn health(State(state): State<Arc<AppState>>) -> Response {
    let uptime = state.started.elapsed().as_secs_f64();
    let Some(served) = state.served() else {
        let body = json!({ "status": "loading", "uptime_seconds": uptime });
        return (StatusCode::SERVICE_UNAVAILABLE, Json(body)).into_response();
    };
    Json(json!({
        "status": "ok",
        "model_version": served.version,
        "vocabulary_size": served.model.vocabulary().len(),
        "class_count": served.model.classes().len(),
        "uptime_seconds": uptime,
    }))
    .into_response()
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/v1/classify", post(classify))
        .route("/v1/health", get(health))
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(state)
}

pub fn load_served(model: &std::path::Path, labels: Option<&std::path::Path>) -> Result<ServedModel, CliError> {
    let loaded = persist::load(model)?;
    Ok(ServedModel {
        model: loaded.model,
        labels: load_labels(labels)?,
        version: loaded.fingerprint,
    })
}

/// Binds `addr`, loads the model in the background and serves until Ctrl-C.
pub async fn serve(addr: SocketAddr, model: PathBuf, labels: Option<PathBuf>) -> Result<(), CliError> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|source| CliError::Io {
            context: format!("serve: cannot bind {addr}"),
            source,
        })?;
    log::info!("listening on {}", listener.local_addr().unwrap_or(addr));
    let state = AppState::new();
    let loader_state = Arc::clone(&state);
    let loader = tokio::task::spawn_blocking(move || -> Result<(), CliError> {
        let served = load_served(&model, labels.as_deref())?;
        log::info!(
            "model {} loaded: {} classes, {} words",
            served.version,
            served.model.classes().len(),
            served.model.vocabulary().len()
        );
        loader_state.install(served);
        Ok(())
    });
    let server = axum::serve(listener, router(state)).with_graceful_shutdown(async {
        let _ = tokio::signal::ctrl_c().await;
    });
    let server = async {
        server.await.map_err(|source| CliError::Io {
            context: "serve".into(),
            source,
        })
    };
    tokio::pin!(server);
    tokio::select! {
        result = &mut server => result,
        loaded = loader => match loaded {
            Ok(Ok(())) => server.await,
            Ok(Err(e)) => Err(e),
            Err(join) => Err(CliError::Io {
                context: "serve: model loader".into(),
                source: std::io::Error::other(join.to_string()),
            }),
        },
    }
}
