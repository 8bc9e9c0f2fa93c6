//! HTTP/JSON API over the pcorder engine: dataset upload, score matrices,
//! window profiles, automatic orderings and interactive ordering sessions.
//!
//! Analyses are cached per dataset and configuration, so a weight change
//! only re-averages cached scores. Large uncached analyses run as background
//! jobs polled through `/jobs/{id}`.

pub mod error;
pub mod routes;
pub mod state;

use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::DefaultBodyLimit;
use axum::http::HeaderValue;
use axum::routing::{get, post};
use axum::Router;
use tower_http::cors::{Any, CorsLayer};
use tower_http::services::ServeDir;

pub use error::ApiError;
pub use state::{AppState, JobStatus, ServiceConfig};

pub fn router(state: Arc<AppState>) -> Router {
    let cors = match state
        .config
        .cors_origin
        .as_deref()
        .and_then(|o| HeaderValue::from_str(o).ok())
    {
        Some(origin) => CorsLayer::new().allow_origin(origin),
        None => CorsLayer::new().allow_origin(Any),
    }
    .allow_methods(Any)
    .allow_headers(Any);

    let static_dir = state.config.static_dir.clone();
    let api = Router::new()
        .route("/datasets", post(routes::upload))
        .route("/datasets/{id}/matrix", get(routes::matrix))
        .route("/datasets/{id}/profile", get(routes::profile))
        .route("/datasets/{id}/order", post(routes::order))
        .route("/datasets/{id}/rows", get(routes::rows))
        .route("/sessions", post(routes::start_session))
        .route("/sessions/{id}/choose", post(routes::choose))
        .route("/sessions/{id}/weights", post(routes::set_weights))
        .route("/sessions/{id}/undo", post(routes::undo))
        .route("/sessions/{id}/finalize", post(routes::finalize))
        .route("/jobs/{id}", get(routes::job))
        .layer(DefaultBodyLimit::max(routes::MAX_UPLOAD_BYTES))
        .with_state(state);
    let app = match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.fallback(routes::not_found),
    };
    app.layer(cors)
}

/// Binds `0.0.0.0:{port}` and serves until the process ends.
pub async fn serve(config: ServiceConfig) -> std::io::Result<()> {
    let addr = SocketAddr::from(([0, 0, 0, 0], config.port));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("pcorder service listening on {}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(AppState::new(config)))).await
}
