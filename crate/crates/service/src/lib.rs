//! HTTP/JSON service holding consultation sessions in memory.
//!
//! | Method | Path | |
//! |---|---|---|
//! | POST | `/api/sessions` | create from a knowledge-base document |
//! | GET | `/api/sessions` | list session ids |
//! | GET | `/api/sessions/{id}/net` | LEGs, event marginals, causal links |
//! | GET | `/api/sessions/{id}/legs/{leg}` | one LEG's events, marginals and cells |
//! | POST | `/api/sessions/{id}/evidence` | apply `{leg, constraints}` |
//! | POST | `/api/sessions/{id}/explain` | explanation plus `renderedText` |
//! | GET | `/api/sessions/{id}/history` | update summaries |
//! | PUT | `/api/sessions/{id}/structure` | replace `causal_links` |
//! | POST | `/api/sessions/{id}/initialize` | back to the loaded priors |
//! | GET/PUT | `/api/sessions/{id}/archive` | save / restore by replay |
//!
//! Errors carry `{code, message, detail}`.

pub mod api;
pub mod error;
pub mod store;
pub mod views;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::DefaultBodyLimit;
use axum::routing::{get, post, put};
use axum::Router;
use tower_http::cors::{Any, CorsLayer};
use tower_http::services::ServeDir;

pub use error::{ApiError, ErrorBody};
pub use store::SessionStore;

const BODY_LIMIT: usize = 64 * 1024 * 1024;

pub fn router(store: Arc<SessionStore>, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/sessions", post(api::create_session).get(api::list_sessions))
        .route("/api/sessions/{id}/net", get(api::get_net))
        .route("/api/sessions/{id}/legs/{leg}", get(api::get_leg))
        .route("/api/sessions/{id}/evidence", post(api::post_evidence))
        .route("/api/sessions/{id}/explain", post(api::post_explain))
        .route("/api/sessions/{id}/history", get(api::get_history))
        .route("/api/sessions/{id}/structure", put(api::put_structure))
        .route("/api/sessions/{id}/initialize", post(api::post_initialize))
        .route("/api/sessions/{id}/archive", get(api::get_archive).put(api::put_archive))
        .with_state(store)
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .layer(CorsLayer::new().allow_origin(Any).allow_methods(Any).allow_headers(Any));
    match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub host: String,
    pub port: u16,
    pub ui_dir: Option<PathBuf>,
}

/// Binds, reports the bound address through `on_ready`, and serves until
/// Ctrl-C.
pub async fn serve(
    config: ServeConfig,
    store: Arc<SessionStore>,
    on_ready: impl FnOnce(SocketAddr),
) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind((config.host.as_str(), config.port)).await?;
    on_ready(listener.local_addr()?);
    axum::serve(listener, router(store, config.ui_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
