//! Route handlers.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::IntoResponse;
use axum::Json;
use gbi_core::{archive, CausalLink, EvidenceSpec, ExplanationQuery, Session};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::error::ApiError;
use crate::store::{SessionStore, SharedSession};
use crate::views::{explain_response, Created, HistoryView, LegView, NetSummary, SessionList, UpdateSummary};

pub type AppState = Arc<SessionStore>;

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(ApiError::bad_json)
}

fn session(store: &SessionStore, id: &str) -> Result<SharedSession, ApiError> {
    store.get(id).ok_or_else(|| ApiError::session_not_found(id))
}

/// Builds a session from knowledge-base JSON, including its causal links.
pub fn session_from_kb(text: &str) -> Result<Session, ApiError> {
    let kb = gbi_core::load_net(text)?;
    Ok(Session::with_links(kb.net, kb.causal_links)?)
}

pub async fn create_session(State(store): State<AppState>, body: Bytes) -> Result<impl IntoResponse, ApiError> {
    let text = std::str::from_utf8(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "ParseError", e.to_string()))?;
    let session = session_from_kb(text)?;
    let net = NetSummary::of(&session);
    let id = store.insert(session);
    Ok((StatusCode::CREATED, Json(Created { id, net })))
}

pub async fn list_sessions(State(store): State<AppState>) -> Json<SessionList> {
    Json(SessionList { sessions: store.ids() })
}

pub async fn get_net(State(store): State<AppState>, Path(id): Path<String>) -> Result<Json<NetSummary>, ApiError> {
    let s = session(&store, &id)?;
    let s = s.lock().expect("session poisoned");
    Ok(Json(NetSummary::of(&s)))
}

pub async fn get_leg(
    State(store): State<AppState>,
    Path((id, leg)): Path<(String, String)>,
) -> Result<Json<LegView>, ApiError> {
    let s = session(&store, &id)?;
    let s = s.lock().expect("session poisoned");
    LegView::of(s.net(), &leg)
        .map(Json)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "UnknownLeg", format!("unknown LEG {leg}")))
}

pub async fn post_evidence(
    State(store): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<impl IntoResponse, ApiError> {
    let s = session(&store, &id)?;
    let spec: EvidenceSpec = parse(&body)?;
    let mut s = s.lock().expect("session poisoned");
    let record = s.apply_evidence(&spec)?;
    Ok((StatusCode::CREATED, Json(UpdateSummary::of(record))))
}

pub async fn post_explain(
    State(store): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<impl IntoResponse, ApiError> {
    let s = session(&store, &id)?;
    let query: ExplanationQuery = parse(&body)?;
    let s = s.lock().expect("session poisoned");
    Ok(Json(explain_response(&s, &query)?))
}

pub async fn get_history(
    State(store): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<HistoryView>, ApiError> {
    let s = session(&store, &id)?;
    let s = s.lock().expect("session poisoned");
    Ok(Json(HistoryView::of(&s)))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Structure {
    causal_links: Vec<CausalLink>,
}

pub async fn put_structure(
    State(store): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<NetSummary>, ApiError> {
    let s = session(&store, &id)?;
    let structure: Structure = parse(&body)?;
    let mut s = s.lock().expect("session poisoned");
    s.set_causal_links(structure.causal_links)?;
    Ok(Json(NetSummary::of(&s)))
}

pub async fn post_initialize(
    State(store): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<NetSummary>, ApiError> {
    let s = session(&store, &id)?;
    let mut s = s.lock().expect("session poisoned");
    s.initialize();
    Ok(Json(NetSummary::of(&s)))
}

pub async fn get_archive(State(store): State<AppState>, Path(id): Path<String>) -> Result<impl IntoResponse, ApiError> {
    let s = session(&store, &id)?;
    let text = archive::save(&s.lock().expect("session poisoned"));
    Ok(([(axum::http::header::CONTENT_TYPE, "application/json")], text))
}

pub async fn put_archive(
    State(store): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<NetSummary>, ApiError> {
    let s = session(&store, &id)?;
    let text = std::str::from_utf8(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "ParseError", e.to_string()))?;
    let restored = archive::load(text)?;
    let mut s = s.lock().expect("session poisoned");
    *s = restored;
    Ok(Json(NetSummary::of(&s)))
}
