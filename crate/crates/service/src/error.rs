use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use cogtop_core::{IndexError, LexiconError, MetricError, QueryError, RetrievalError, SyntaxError};
use serde::Serialize;

/// JSON error body: `{code, message, position?}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub position: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: ErrorBody {
                code: code.to_string(),
                message: message.into(),
                position: None,
            },
        }
    }

    pub fn bad_request(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    pub fn not_found(what: &str, id: &str) -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            "NotFound",
            format!("{what} `{id}` not found"),
        )
    }

    pub fn conflict(message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, "Conflict", message)
    }

    pub fn unprocessable(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, code, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<SyntaxError> for ApiError {
    fn from(e: SyntaxError) -> Self {
        let mut err = ApiError::bad_request("SyntaxError", e.message.clone());
        err.body.position = Some(e.position);
        err
    }
}

impl From<QueryError> for ApiError {
    fn from(e: QueryError) -> Self {
        match e {
            QueryError::Syntax(s) => s.into(),
            other => ApiError::bad_request("InvalidQuery", other.to_string()),
        }
    }
}

impl From<LexiconError> for ApiError {
    fn from(e: LexiconError) -> Self {
        match e {
            LexiconError::UnknownContext(_) => {
                ApiError::unprocessable("UnknownContext", e.to_string())
            }
            _ => ApiError::bad_request("InvalidLexicon", e.to_string()),
        }
    }
}

impl From<IndexError> for ApiError {
    fn from(e: IndexError) -> Self {
        match e {
            IndexError::DuplicateDocumentId(_) => ApiError::conflict(e.to_string()),
            IndexError::Lexicon(l) => l.into(),
            IndexError::Metric(MetricError::Lexicon(l)) => l.into(),
            IndexError::Metric(MetricError::EmptyOperand) => {
                ApiError::bad_request("EmptyQuery", e.to_string())
            }
            IndexError::Metric(_) => ApiError::unprocessable("Undefined", e.to_string()),
            IndexError::Io(_) => ApiError::internal(e.to_string()),
            _ => ApiError::bad_request("InvalidCorpus", e.to_string()),
        }
    }
}

impl From<RetrievalError> for ApiError {
    fn from(e: RetrievalError) -> Self {
        let message = e.to_string();
        match e {
            RetrievalError::BadEpsilon(_) => ApiError::unprocessable("BadEpsilon", message),
            RetrievalError::TooLarge(_) | RetrievalError::TooManyGenerators(_) => {
                ApiError::unprocessable("TooLarge", message)
            }
            RetrievalError::NotElementary => ApiError::bad_request("NotElementary", message),
            RetrievalError::EmptyQuery => ApiError::bad_request("EmptyQuery", message),
            RetrievalError::EmptySequence => ApiError::bad_request("EmptySequence", message),
            RetrievalError::Index(inner) => inner.into(),
        }
    }
}
