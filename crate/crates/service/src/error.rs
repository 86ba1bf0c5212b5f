use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::json;

/// Error returned by a handler, rendered as `{"error": message}`.
#[derive(Debug, thiserror::Error)]
#[error("{message}")]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    pub fn conflict(message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, message)
    }

    pub fn no_dataset() -> Self {
        Self::conflict("no dataset loaded")
    }
}

impl From<tsprobe_core::Error> for ApiError {
    fn from(e: tsprobe_core::Error) -> Self {
        use tsprobe_core::Error as E;
        let status = match &e {
            E::Io { .. } => StatusCode::NOT_FOUND,
            E::Json(_) | E::Parse { .. } | E::Validation(_) | E::Config(_) | E::Parameter(_) | E::Step { .. } => {
                StatusCode::BAD_REQUEST
            }
            E::InsufficientLength { .. } | E::ScaleFree | E::EmptyRegion => StatusCode::UNPROCESSABLE_ENTITY,
            E::DegenerateFeatures => StatusCode::UNPROCESSABLE_ENTITY,
        };
        Self::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

pub type ApiResult<T> = Result<T, ApiError>;
