use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;
use tower_http::services::ServeDir;

use crate::campaign::CampaignDefinition;
use crate::service::{Answer, ListenService};
use crate::ListenError;

impl IntoResponse for ListenError {
    fn into_response(self) -> Response {
        let status = match &self {
            ListenError::InvalidDefinition(_) | ListenError::MissingAudio(_) | ListenError::Domain(_) => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            ListenError::InvalidSession => StatusCode::BAD_REQUEST,
            ListenError::UnknownCampaign(_) | ListenError::UnknownTask(_) => StatusCode::NOT_FOUND,
            ListenError::WrongSession(_) => StatusCode::FORBIDDEN,
            ListenError::Closed(_) | ListenError::Duplicate(_) | ListenError::DuplicateCampaign(_) => StatusCode::CONFLICT,
            ListenError::Io(_) | ListenError::Json(_) | ListenError::CorruptLog { .. } => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let mut body = json!({ "error": self.code(), "message": self.to_string() });
        match &self {
            ListenError::InvalidDefinition(fields) => body["fields"] = json!(fields),
            ListenError::MissingAudio(files) => body["missing"] = json!(files),
            _ => {}
        }
        (status, Json(body)).into_response()
    }
}

#[derive(Deserialize)]
struct SessionQuery {
    session: String,
}

#[derive(Deserialize)]
struct SubmitBody {
    task_id: String,
    session: String,
    #[serde(flatten)]
    answer: Answer,
}

type Svc = State<Arc<ListenService>>;

async fn create(State(svc): Svc, Json(def): Json<CampaignDefinition>) -> Result<impl IntoResponse, ListenError> {
    let id = svc.create_campaign(def)?;
    let summary = svc.summary(&id)?;
    Ok((StatusCode::CREATED, Json(summary)))
}

async fn list(State(svc): Svc) -> impl IntoResponse {
    Json(json!({ "campaigns": svc.campaign_ids() }))
}

async fn show(State(svc): Svc, Path(id): Path<String>) -> Result<impl IntoResponse, ListenError> {
    Ok(Json(svc.summary(&id)?))
}

async fn close(State(svc): Svc, Path(id): Path<String>) -> Result<impl IntoResponse, ListenError> {
    svc.close_campaign(&id)?;
    Ok(Json(svc.summary(&id)?))
}

async fn next(State(svc): Svc, Path(id): Path<String>, Query(q): Query<SessionQuery>) -> Result<impl IntoResponse, ListenError> {
    Ok(Json(svc.next_task(&id, &q.session)?))
}

async fn submit(State(svc): Svc, Json(body): Json<SubmitBody>) -> Result<impl IntoResponse, ListenError> {
    let r = svc.submit(&body.task_id, &body.session, body.answer)?;
    Ok((StatusCode::CREATED, Json(r)))
}

async fn results(State(svc): Svc, Path(id): Path<String>) -> Result<impl IntoResponse, ListenError> {
    Ok(Json(svc.results(&id)?))
}

async fn audit(State(svc): Svc) -> Result<impl IntoResponse, ListenError> {
    Ok(Json(svc.audit()?))
}

/// All routes, with `/audio/*` served from the service's audio directory
/// (byte ranges supported).
pub fn router(service: Arc<ListenService>) -> Router {
    let audio = ServeDir::new(service.audio_dir());
    Router::new()
        .route("/campaigns", post(create).get(list))
        .route("/campaigns/{id}", get(show))
        .route("/campaigns/{id}/close", post(close))
        .route("/campaigns/{id}/next", get(next))
        .route("/campaigns/{id}/results", get(results))
        .route("/responses", post(submit))
        .route("/audit", get(audit))
        .nest_service("/audio", audio)
        .with_state(service)
}

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub bind: SocketAddr,
    pub data_dir: PathBuf,
    pub audio_dir: PathBuf,
}

/// Serve until `shutdown` resolves.
pub async fn serve(
    config: ServerConfig,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
    on_bound: impl FnOnce(SocketAddr),
) -> Result<(), ListenError> {
    let service = Arc::new(ListenService::open(&config.data_dir, &config.audio_dir)?);
    let listener = tokio::net::TcpListener::bind(config.bind).await?;
    on_bound(listener.local_addr()?);
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(service)).with_graceful_shutdown(shutdown).await?;
    Ok(())
}
