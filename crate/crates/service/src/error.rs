use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;

use bayes_assess::engine::TerminalReason;
use bayes_assess::Error;

/// Error body: `{"error": code, "message": text}`, plus `reason` for 410.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorBody {
    pub error: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<TerminalReason>,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, error: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: ErrorBody {
                error,
                message: message.into(),
                reason: None,
            },
        }
    }

    pub fn unknown_session(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "unknown_session", format!("no session `{id}`"))
    }

    pub fn terminal(reason: TerminalReason) -> Self {
        let mut e = Self::new(
            StatusCode::GONE,
            "session_finished",
            format!("session finished: {}", reason_name(reason)),
        );
        e.body.reason = Some(reason);
        e
    }

    pub fn unauthorized() -> Self {
        Self::new(StatusCode::UNAUTHORIZED, "unauthorized", "missing or wrong bearer token")
    }
}

fn reason_name(reason: TerminalReason) -> &'static str {
    match reason {
        TerminalReason::Budget => "label budget reached",
        TerminalReason::Stopped => "stopping rule met",
        TerminalReason::Exhausted => "pool exhausted",
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let (status, code) = match &e {
            Error::NotPending { .. } => (StatusCode::CONFLICT, "not_pending"),
            Error::OutcomeRange { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "outcome_out_of_range"),
            Error::InvalidConfig(_)
            | Error::InvalidParameter(_)
            | Error::CostMatrix(_)
            | Error::DimensionMismatch { .. }
            | Error::MissingAttribute { .. } => (StatusCode::BAD_REQUEST, "invalid_config"),
            Error::Json(_) => (StatusCode::BAD_REQUEST, "bad_request"),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}
