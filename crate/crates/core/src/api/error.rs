use std::time::Duration;

use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;

use crate::accounts::AccountError;
use crate::analysis::ImageError;
use crate::domain::SpecViolation;
use crate::jobs::JobError;
use crate::store::StoreError;

/// Error body returned by every endpoint: `{"code": ..., "message": ...}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub violations: Vec<SpecViolation>,
    pub retry_after: Option<Duration>,
}

#[derive(Serialize)]
struct Body<'a> {
    code: &'a str,
    message: &'a str,
    #[serde(skip_serializing_if = "<[_]>::is_empty")]
    violations: &'a [SpecViolation],
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError { status, code, message: message.into(), violations: Vec::new(), retry_after: None }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    pub fn invalid_window() -> Self {
        Self::new(StatusCode::BAD_REQUEST, "InvalidWindow", "start is after end")
    }

    pub fn unauthenticated() -> Self {
        Self::new(StatusCode::UNAUTHORIZED, "unauthenticated", "missing, unknown or expired session")
    }

    pub fn forbidden() -> Self {
        Self::new(StatusCode::FORBIDDEN, "unauthorized", "not permitted")
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = Body { code: self.code, message: &self.message, violations: &self.violations };
        let mut resp = (self.status, Json(body)).into_response();
        if let Some(wait) = self.retry_after {
            let secs = wait.as_secs_f64().ceil() as u64;
            resp.headers_mut().insert(header::RETRY_AFTER, HeaderValue::from(secs));
        }
        resp
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let msg = e.to_string();
        match e {
            StoreError::UnknownJob(_) | StoreError::JobDeleted(_) => Self::new(StatusCode::NOT_FOUND, "unknown_job", msg),
            StoreError::UnknownAccount(_) => Self::new(StatusCode::NOT_FOUND, "unknown_account", msg),
            StoreError::EmailTaken => Self::new(StatusCode::BAD_REQUEST, "email_taken", msg),
            StoreError::InvalidState => Self::new(StatusCode::BAD_REQUEST, "invalid_state", msg),
            StoreError::Unauthorized => Self::new(StatusCode::FORBIDDEN, "unauthorized", msg),
            StoreError::StorageFailure(_) => {
                tracing::error!(error = %msg, "storage failure");
                Self::new(StatusCode::INTERNAL_SERVER_ERROR, "storage_failure", "storage failure")
            }
        }
    }
}

impl From<AccountError> for ApiError {
    fn from(e: AccountError) -> Self {
        let msg = e.to_string();
        match e {
            AccountError::EmailTaken => Self::new(StatusCode::BAD_REQUEST, "email_taken", msg),
            AccountError::WeakPassword => Self::new(StatusCode::BAD_REQUEST, "weak_password", msg),
            AccountError::InvalidEmail => Self::new(StatusCode::BAD_REQUEST, "invalid_email", msg),
            AccountError::InvalidDecision => Self::new(StatusCode::BAD_REQUEST, "invalid_decision", msg),
            AccountError::InvalidState => Self::new(StatusCode::BAD_REQUEST, "invalid_state", msg),
            AccountError::InvalidCredentials => Self::new(StatusCode::UNAUTHORIZED, "invalid_credentials", msg),
            AccountError::Unauthenticated => Self::unauthenticated(),
            AccountError::Unauthorized => Self::forbidden(),
            AccountError::UnknownAccount(_) => Self::new(StatusCode::NOT_FOUND, "unknown_account", msg),
            AccountError::Storage(s) => s.into(),
        }
    }
}

impl From<JobError> for ApiError {
    fn from(e: JobError) -> Self {
        let msg = e.to_string();
        match e {
            JobError::Unauthorized => Self::forbidden(),
            JobError::InvalidSpec(violations) => {
                ApiError { violations, ..Self::new(StatusCode::BAD_REQUEST, "invalid_spec", msg) }
            }
            JobError::UnknownJob(_) => Self::new(StatusCode::NOT_FOUND, "unknown_job", msg),
            JobError::Storage(s) => s.into(),
        }
    }
}

impl From<ImageError> for ApiError {
    fn from(e: ImageError) -> Self {
        let msg = e.to_string();
        let code = e.kind();
        match e {
            ImageError::InvalidPageId(_) => Self::new(StatusCode::BAD_REQUEST, code, msg),
            ImageError::GraphLookupFailed(_) | ImageError::DownloadFailed(_) | ImageError::NotAnImage(_) => {
                Self::new(StatusCode::NOT_FOUND, code, msg)
            }
            ImageError::RateLimited(wait) => {
                ApiError { retry_after: Some(wait), ..Self::new(StatusCode::TOO_MANY_REQUESTS, code, msg) }
            }
            ImageError::Storage(_) => {
                tracing::error!(error = %msg, "image store failure");
                Self::new(StatusCode::INTERNAL_SERVER_ERROR, "storage_failure", "storage failure")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jobs::JobId;

    fn all_module_errors() -> Vec<ApiError> {
        let store = || {
            vec![
                StoreError::UnknownJob(JobId::from("j")),
                StoreError::JobDeleted(JobId::from("j")),
                StoreError::UnknownAccount("a".into()),
                StoreError::EmailTaken,
                StoreError::InvalidState,
                StoreError::Unauthorized,
            ]
        };
        let mut out: Vec<ApiError> = store().into_iter().map(Into::into).collect();
        out.extend(store().into_iter().map(|s| JobError::from(s).into()));
        out.extend(store().into_iter().map(|s| AccountError::Storage(s).into()));
        out.extend(
            [
                AccountError::EmailTaken,
                AccountError::WeakPassword,
                AccountError::InvalidEmail,
                AccountError::InvalidCredentials,
                AccountError::Unauthenticated,
                AccountError::Unauthorized,
                AccountError::InvalidState,
                AccountError::UnknownAccount("x".into()),
                AccountError::InvalidDecision,
            ]
            .into_iter()
            .map(ApiError::from),
        );
        out.extend(
            [JobError::Unauthorized, JobError::InvalidSpec(vec![SpecViolation::EmptySearchTerm]), JobError::UnknownJob(JobId::from("j"))]
                .into_iter()
                .map(ApiError::from),
        );
        out.extend(
            [
                ImageError::InvalidPageId("..".into()),
                ImageError::GraphLookupFailed("p".into()),
                ImageError::DownloadFailed("p".into()),
                ImageError::NotAnImage("text/html".into()),
                ImageError::RateLimited(Duration::from_millis(1500)),
            ]
            .into_iter()
            .map(ApiError::from),
        );
        out
    }

    #[test]
    fn only_storage_failures_are_500() {
        for e in all_module_errors() {
            assert_ne!(e.status, StatusCode::INTERNAL_SERVER_ERROR, "{e:?}");
            assert!(
                [400, 401, 403, 404, 429].contains(&e.status.as_u16()),
                "{} -> {}",
                e.code,
                e.status
            );
        }
        let e: ApiError = JobError::Storage(StoreError::StorageFailure("disk".into())).into();
        assert_eq!((e.status, e.code), (StatusCode::INTERNAL_SERVER_ERROR, "storage_failure"));
        assert_eq!(e.message, "storage failure");
    }

    #[test]
    fn each_code_has_one_status() {
        let mut seen = std::collections::HashMap::new();
        for e in all_module_errors() {
            let prev = seen.insert(e.code, e.status);
            assert!(prev.is_none() || prev == Some(e.status), "{} maps to two statuses", e.code);
        }
    }

    #[test]
    fn rate_limit_carries_retry_after() {
        let resp = ApiError::from(ImageError::RateLimited(Duration::from_millis(1500))).into_response();
        assert_eq!(resp.status(), StatusCode::TOO_MANY_REQUESTS);
        assert_eq!(resp.headers()[header::RETRY_AFTER], "2");
    }
}
