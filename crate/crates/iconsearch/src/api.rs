//! HTTP routes.
//!
//! | route | body |
//! |---|---|
//! | `GET /api/search?q&mode&k&n&probe&ranking` | multimodal or TF-IDF results |
//! | `POST /api/search/image?k&n&probe&ranking` | image bytes in, multimodal results out |
//! | `GET /api/notations/{code}` | label, parent, children, image count |
//! | `GET /api/notations/{code}/children` | labeled children |
//! | `GET /api/images/{id}` | corpus record |
//! | `GET /api/status` | corpus and configuration summary |
//!
//! Errors come back as `{"error": "..."}` with the status from
//! [`ApiError`].

use std::future::Future;
use std::path::Path;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::QueryRejection;
use axum::extract::{DefaultBodyLimit, Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use iconsearch_core::Ranking;
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;
use tower_http::services::ServeDir;

use crate::service::{ApiError, Mode, SearchOptions, Service, MAX_IMAGE_BYTES};

type AppState = Arc<Service>;

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        #[derive(Serialize)]
        struct Body {
            error: String,
        }
        (self.status, Json(Body { error: self.message })).into_response()
    }
}

/// Query string fields, kept as text so that bad values produce a useful
/// message.
#[derive(Debug, Default, Deserialize)]
struct RawSearch {
    q: Option<String>,
    mode: Option<String>,
    k: Option<String>,
    n: Option<String>,
    probe: Option<String>,
    ranking: Option<String>,
}

fn positive(name: &str, value: Option<&String>) -> Result<Option<usize>, ApiError> {
    value
        .map(|v| match v.parse::<usize>() {
            Ok(0) | Err(_) => Err(ApiError::bad_request(format!("{name} must be a positive integer, got {v:?}"))),
            Ok(x) => Ok(x),
        })
        .transpose()
}

impl RawSearch {
    fn options(&self) -> Result<SearchOptions, ApiError> {
        let ranking = match self.ranking.as_deref() {
            None | Some("count") => Ranking::Count,
            Some("score-sum") => Ranking::ScoreSum,
            Some(other) => {
                return Err(ApiError::bad_request(format!(
                    "ranking must be count or score-sum, got {other:?}"
                )))
            }
        };
        Ok(SearchOptions {
            k: positive("k", self.k.as_ref())?,
            n: positive("n", self.n.as_ref())?,
            probe: positive("probe", self.probe.as_ref())?,
            ranking,
        })
    }
}

fn raw(query: Result<Query<RawSearch>, QueryRejection>) -> Result<RawSearch, ApiError> {
    query
        .map(|Query(raw)| raw)
        .map_err(|e| ApiError::bad_request(e.body_text()))
}

/// Runs `f` on the blocking pool; endpoint encoders do blocking I/O.
async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ApiError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
}

async fn search(
    State(service): State<AppState>,
    query: Result<Query<RawSearch>, QueryRejection>,
) -> Result<Response, ApiError> {
    let raw = raw(query)?;
    let options = raw.options()?;
    let mode: Mode = raw.mode.as_deref().unwrap_or("multimodal").parse()?;
    let q = raw.q.unwrap_or_default();
    let response = blocking(move || service.search_text(&q, mode, &options)).await?;
    Ok(Json(response).into_response())
}

async fn search_image(
    State(service): State<AppState>,
    query: Result<Query<RawSearch>, QueryRejection>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let options = raw(query)?.options()?;
    let response = blocking(move || service.search_image(body.to_vec(), &options)).await?;
    Ok(Json(response).into_response())
}

async fn notation(State(service): State<AppState>, UrlPath(code): UrlPath<String>) -> Result<Response, ApiError> {
    Ok(Json(service.notation(&code)?).into_response())
}

async fn children(State(service): State<AppState>, UrlPath(code): UrlPath<String>) -> Result<Response, ApiError> {
    Ok(Json(service.children(&code)?).into_response())
}

async fn image(State(service): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Response, ApiError> {
    Ok(Json(service.image(&id)?).into_response())
}

async fn status(State(service): State<AppState>) -> Response {
    Json(service.status()).into_response()
}

async fn api_not_found() -> ApiError {
    ApiError::not_found("no such endpoint")
}

pub fn router(service: Arc<Service>, static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/api/search", get(search))
        .route(
            "/api/search/image",
            post(search_image).layer(DefaultBodyLimit::max(MAX_IMAGE_BYTES)),
        )
        .route("/api/notations/{code}", get(notation))
        .route("/api/notations/{code}/children", get(children))
        .route("/api/images/{id}", get(image))
        .route("/api/status", get(status))
        .route("/api/{*rest}", get(api_not_found))
        .with_state(service);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Serves `router` until `shutdown` resolves; in-flight requests finish
/// first.
pub async fn serve(
    listener: TcpListener,
    router: Router,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router).with_graceful_shutdown(shutdown).await
}
