//! Uniform JSON error bodies: `{code, message, detail}`.

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use gbi_core::{ArchiveError, ExplainError, NetError, UpdateError};
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    pub detail: Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: ErrorBody {
                code: code.to_owned(),
                message: message.into(),
                detail: Value::Null,
            },
        }
    }

    pub fn with_detail(mut self, detail: Value) -> Self {
        self.body.detail = detail;
        self
    }

    pub fn session_not_found(id: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "SessionNotFound", format!("no session {id}"))
    }

    pub fn bad_json(err: serde_json::Error) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "ParseError", format!("request body is not valid: {err}"))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<NetError> for ApiError {
    fn from(e: NetError) -> Self {
        let detail = match &e {
            NetError::InconsistentMarginals {
                leg_a,
                leg_b,
                shared,
                discrepancy,
            } => json!({ "leg_a": leg_a, "leg_b": leg_b, "shared": shared, "discrepancy": discrepancy }),
            NetError::CyclicLegGraph { legs, edges } => json!({ "legs": legs, "edges": edges }),
            _ => Value::Null,
        };
        ApiError::new(StatusCode::BAD_REQUEST, e.code(), e.to_string()).with_detail(detail)
    }
}

impl From<UpdateError> for ApiError {
    fn from(e: UpdateError) -> Self {
        let status = match &e {
            UpdateError::ImpossibleEvidence(_) => StatusCode::CONFLICT,
            UpdateError::UnknownUpdate(_) => StatusCode::NOT_FOUND,
            UpdateError::NoConvergence { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::BAD_REQUEST,
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

impl From<ExplainError> for ApiError {
    fn from(e: ExplainError) -> Self {
        let status = match &e {
            ExplainError::FilterRequired | ExplainError::FilterExhausted(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ExplainError::UnknownUpdate(_) | ExplainError::NoUpdates => StatusCode::NOT_FOUND,
            ExplainError::Update(u) => return ApiError::from(u.clone()),
            _ => StatusCode::BAD_REQUEST,
        };
        let detail = match &e {
            ExplainError::CyclicCausalGraph(cycle) => json!({ "cycle": cycle }),
            _ => Value::Null,
        };
        ApiError::new(status, e.code(), e.to_string()).with_detail(detail)
    }
}

impl From<ArchiveError> for ApiError {
    fn from(e: ArchiveError) -> Self {
        match e {
            ArchiveError::Net(n) => n.into(),
            ArchiveError::Explain(x) => x.into(),
            ArchiveError::Replay { index, source } => {
                let mut err = ApiError::from(source);
                err.status = StatusCode::BAD_REQUEST;
                err.body.message = format!("replaying update {index}: {}", err.body.message);
                err.with_detail(json!({ "update": index }))
            }
            other => ApiError::new(StatusCode::BAD_REQUEST, other.code(), other.to_string()),
        }
    }
}
