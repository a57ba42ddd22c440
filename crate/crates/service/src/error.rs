use axum::extract::rejection::{JsonRejection, QueryRejection, StringRejection};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use reconplan_core::{ErrorReport, Stage, StageError};

/// An error response: HTTP status plus the structured report as JSON body.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub report: ErrorReport,
}

impl ApiError {
    pub fn new(status: StatusCode, stage: Stage, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            report: ErrorReport {
                stage,
                code: code.into(),
                column: None,
                row: None,
                message: message.into(),
            },
        }
    }

    pub fn not_found(kind: &str, id: &str) -> Self {
        ApiError::new(
            StatusCode::NOT_FOUND,
            Stage::Request,
            "NotFound",
            format!("no {kind} with id `{id}`"),
        )
    }

    pub fn bad_request(code: &str, message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, Stage::Request, code, message)
    }

    fn rejection(status: StatusCode, text: String) -> Self {
        let code = if status == StatusCode::PAYLOAD_TOO_LARGE {
            "PayloadTooLarge"
        } else {
            "BadRequest"
        };
        ApiError::new(status, Stage::Request, code, text)
    }
}

impl From<StageError> for ApiError {
    fn from(e: StageError) -> Self {
        // malformed input is the client's fault; anything later in the
        // pipeline is a well-formed request that cannot be processed
        let status = match e.stage {
            Stage::Request | Stage::Load => StatusCode::BAD_REQUEST,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        ApiError {
            status,
            report: e.report(),
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        ApiError::rejection(r.status(), r.body_text())
    }
}

impl From<StringRejection> for ApiError {
    fn from(r: StringRejection) -> Self {
        ApiError::rejection(r.status(), r.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(r: QueryRejection) -> Self {
        ApiError::rejection(r.status(), r.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.report)).into_response()
    }
}
