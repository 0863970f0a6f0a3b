use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use simproj_api::{ErrorBody, SessionId};

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("session {0} not found")]
    SessionNotFound(SessionId),

    #[error("session limit of {0} reached")]
    TooManySessions(usize),

    #[error("{source}")]
    Core {
        source: simproj_core::Error,
        accepted: Option<usize>,
    },

    #[error("worker task failed: {0}")]
    Join(#[from] tokio::task::JoinError),
}

impl From<simproj_core::Error> for ApiError {
    fn from(source: simproj_core::Error) -> Self {
        ApiError::Core { source, accepted: None }
    }
}

impl ApiError {
    pub fn status(&self) -> StatusCode {
        use simproj_core::Error as E;
        match self {
            ApiError::SessionNotFound(_) => StatusCode::NOT_FOUND,
            ApiError::TooManySessions(_) => StatusCode::SERVICE_UNAVAILABLE,
            ApiError::Join(_) => StatusCode::INTERNAL_SERVER_ERROR,
            ApiError::Core { source, .. } => match source {
                E::DuplicateEdge(_) => StatusCode::CONFLICT,
                E::Open { source, .. } if source.kind() == std::io::ErrorKind::NotFound => StatusCode::NOT_FOUND,
                E::Open { .. } => StatusCode::BAD_REQUEST,
                E::Parse { .. } => StatusCode::UNPROCESSABLE_ENTITY,
                E::InvalidCapacity(_)
                | E::InvalidUpdate(_)
                | E::InvalidPair
                | E::Infeasible(_)
                | E::Config(_)
                | E::SizeGuard(..)
                | E::OracleOverflow { .. } => StatusCode::BAD_REQUEST,
                _ => StatusCode::INTERNAL_SERVER_ERROR,
            },
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = self.status();
        if status.is_server_error() {
            tracing::error!(error = %self, "request failed");
        }
        let accepted = match &self {
            ApiError::Core { accepted, .. } => *accepted,
            _ => None,
        };
        (status, Json(ErrorBody { error: self.to_string(), accepted })).into_response()
    }
}
