use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};

use crackfield::field_io::FieldError;
use crackfield::Error;

/// Machine-readable error body shared by the service and the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorPayload {
    pub kind: String,
    pub module: String,
    pub message: String,
    /// Offending input line for row-level parse errors.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
}

impl ErrorPayload {
    pub fn new(kind: &str, module: &str, message: impl Into<String>) -> Self {
        ErrorPayload {
            kind: kind.into(),
            module: module.into(),
            message: message.into(),
            line: None,
        }
    }
}

impl From<&Error> for ErrorPayload {
    fn from(e: &Error) -> Self {
        let line = match e {
            Error::Field(
                FieldError::MalformedRow { line, .. } | FieldError::MixedColumnCounts { line, .. },
            ) => Some(*line),
            _ => None,
        };
        ErrorPayload {
            kind: e.kind().into(),
            module: e.module().into(),
            message: e.to_string(),
            line,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ApiError {
    pub status: StatusCode,
    pub payload: ErrorPayload,
}

impl ApiError {
    pub fn new(status: StatusCode, kind: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            payload: ErrorPayload::new(kind, "service", message),
        }
    }

    pub fn engine(status: StatusCode, e: &Error) -> Self {
        ApiError {
            status,
            payload: e.into(),
        }
    }

    pub fn not_found(what: &str, id: &str) -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            "NotFound",
            format!("unknown {what} '{id}'"),
        )
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "BadRequest", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.payload)).into_response()
    }
}
