use reqpath_core::selection::SelectionError;
use reqpath_core::workflow::{ErrorClass, WorkflowError};
use reqpath_core::KbError;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::ConfigError;
use crate::persistence::PersistError;
use crate::report::ReportError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    /// Malformed request: bad arguments, unparsable body.
    Usage,
    /// Well-formed request the domain rules reject.
    Domain,
    /// Rejected by a phase gate or by concurrency control.
    Conflict,
    NotFound,
    ReadOnly,
    Internal,
}

/// Error payload shared by the HTTP and command-line front ends.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub kind: ErrorKind,
    pub code: String,
    pub message: String,
    pub details: Value,
}

impl ApiError {
    pub fn new(kind: ErrorKind, code: impl Into<String>, message: impl Into<String>) -> Self {
        ApiError {
            kind,
            code: code.into(),
            message: message.into(),
            details: json!({}),
        }
    }

    pub fn with_details(mut self, details: Value) -> Self {
        self.details = details;
        self
    }

    pub fn usage(message: impl Into<String>) -> Self {
        ApiError::new(ErrorKind::Usage, "usage", message)
    }

    pub fn invalid_body(message: impl Into<String>) -> Self {
        ApiError::new(ErrorKind::Domain, "invalid_body", message)
    }

    pub fn read_only() -> Self {
        ApiError::new(ErrorKind::ReadOnly, "read_only", "the service is running in read-only mode")
    }

    pub fn stale_version(expected: u64, actual: u64) -> Self {
        ApiError::new(
            ErrorKind::Conflict,
            "version_conflict",
            format!("session is at version {actual}, request expected {expected}"),
        )
        .with_details(json!({ "expected": expected, "actual": actual }))
    }

    pub fn internal(message: impl Into<String>) -> Self {
        ApiError::new(ErrorKind::Internal, "internal", message)
    }
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} ({})", self.message, self.code)
    }
}

impl std::error::Error for ApiError {}

impl From<SelectionError> for ApiError {
    fn from(e: SelectionError) -> Self {
        let kind = if e.is_unknown_id() {
            ErrorKind::NotFound
        } else {
            ErrorKind::Domain
        };
        ApiError::new(kind, e.code(), e.to_string())
    }
}

impl From<KbError> for ApiError {
    fn from(e: KbError) -> Self {
        let kind = match e {
            KbError::UnknownActivity(_) => ErrorKind::NotFound,
            _ => ErrorKind::Domain,
        };
        let details = match &e {
            KbError::Invalid(report) => json!({ "findings": report.errors().collect::<Vec<_>>() }),
            KbError::Parse { line, column, .. } => json!({ "line": line, "column": column }),
            KbError::UnknownActivity(id) => json!({ "subjects": [id] }),
        };
        ApiError::new(kind, e.code(), e.to_string()).with_details(details)
    }
}

impl From<WorkflowError> for ApiError {
    fn from(e: WorkflowError) -> Self {
        let kind = match (&e, e.class()) {
            (WorkflowError::CorruptSession(_), _) => ErrorKind::Internal,
            (_, ErrorClass::NotFound) => ErrorKind::NotFound,
            (_, ErrorClass::Gating) => ErrorKind::Conflict,
            (_, ErrorClass::Domain) => ErrorKind::Domain,
        };
        ApiError::new(kind, e.code(), e.to_string()).with_details(json!({ "subjects": e.subjects() }))
    }
}

impl From<PersistError> for ApiError {
    fn from(e: PersistError) -> Self {
        let kind = match e {
            PersistError::NotFound(_) => ErrorKind::NotFound,
            PersistError::InvalidId(_) => ErrorKind::Domain,
            PersistError::Corrupt { .. } | PersistError::Io { .. } => ErrorKind::Internal,
        };
        ApiError::new(kind, e.code(), e.to_string())
    }
}

impl From<ConfigError> for ApiError {
    fn from(e: ConfigError) -> Self {
        ApiError::new(ErrorKind::Domain, e.code(), e.to_string())
    }
}

impl From<ReportError> for ApiError {
    fn from(e: ReportError) -> Self {
        match e {
            ReportError::NothingToReport => ApiError::usage(e.to_string()),
            ReportError::Selection(inner) => inner.into(),
        }
    }
}
