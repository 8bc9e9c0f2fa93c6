use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use pcorder_core::report::OrderReportError;
use pcorder_core::{DataError, OrderingError, ScoringError, SessionError, WindowSpecError};
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Error body returned by every endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<Value>,
    #[serde(skip)]
    pub status: u16,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            code: code.to_string(),
            message: message.into(),
            detail: None,
            status: status.as_u16(),
        }
    }

    pub fn with_detail(mut self, detail: Value) -> Self {
        self.detail = Some(detail);
        self
    }

    pub fn not_found(kind: &str, id: &str) -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            &format!("unknown_{kind}"),
            format!("no {kind} with id `{id}`"),
        )
        .with_detail(serde_json::json!({ "id": id }))
    }

    pub fn bad_request(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    pub fn unprocessable(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, code, message)
    }

    pub fn status_code(&self) -> StatusCode {
        StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status_code(), Json(self)).into_response()
    }
}

impl From<DataError> for ApiError {
    fn from(e: DataError) -> Self {
        Self::bad_request(e.code(), e.to_string())
    }
}

impl From<ScoringError> for ApiError {
    fn from(e: ScoringError) -> Self {
        let status = match e {
            ScoringError::NoActiveProperties
            | ScoringError::InvalidWeight { .. }
            | ScoringError::MalformedWeights(_)
            | ScoringError::UnknownProperty(_)
            | ScoringError::DuplicateWeight(_)
            | ScoringError::Window(_) => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::BAD_REQUEST,
        };
        Self::new(status, e.code(), e.to_string())
    }
}

impl From<WindowSpecError> for ApiError {
    fn from(e: WindowSpecError) -> Self {
        ScoringError::from(e).into()
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::Scoring(s) => s.into(),
            other => Self::bad_request(other.code(), other.to_string()),
        }
    }
}

impl From<OrderingError> for ApiError {
    fn from(e: OrderingError) -> Self {
        let status = match e {
            OrderingError::UnknownMode(_) => StatusCode::UNPROCESSABLE_ENTITY,
            OrderingError::EmptyMatrix => StatusCode::BAD_REQUEST,
        };
        Self::new(status, e.code(), e.to_string())
    }
}

impl From<OrderReportError> for ApiError {
    fn from(e: OrderReportError) -> Self {
        match e {
            OrderReportError::Scoring(s) => s.into(),
            OrderReportError::Ordering(o) => o.into(),
        }
    }
}
