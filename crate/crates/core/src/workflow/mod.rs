//! The requirements-generation workflow: iterative Local Analysis gated by
//! an exit-criteria checklist, Global Evaluation, then the Business
//! Concerns activities in rank order.

mod journal;
mod session;
mod types;

use thiserror::Error;

pub use journal::{apply, Applied, Command, Journal, LogEntry};
pub use session::WorkflowSession;
pub use types::*;

/// Groups errors by how a front end should report them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Invalid input or a broken domain rule.
    Domain,
    /// The operation is illegal in the session's current state.
    Gating,
    /// An id does not resolve.
    NotFound,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WorkflowError {
    #[error("a session needs at least one need statement")]
    MissingNeeds,
    #[error("need id `{0}` is used more than once")]
    DuplicateNeedId(String),
    #[error("need `{0}` must have a non-empty id and statement")]
    InvalidNeed(String),
    #[error("`{operation}` is not allowed in phase {phase}")]
    PhaseViolation {
        operation: &'static str,
        phase: SessionPhase,
    },
    #[error("session is done; no further changes are accepted")]
    SessionDone,
    #[error("unknown requirement `{0}`")]
    UnknownRequirement(String),
    #[error("unknown need `{0}`")]
    UnknownNeed(String),
    #[error("unknown conflict `{0}`")]
    UnknownConflict(String),
    #[error("unknown activity `{0}`")]
    UnknownActivity(String),
    #[error("unknown method `{0}`")]
    UnknownMethod(String),
    #[error("unknown quality attribute `{0}`")]
    UnknownAttribute(String),
    #[error("requirement text must not be empty")]
    EmptyText,
    #[error("increment label must not be empty")]
    EmptyIncrementLabel,
    #[error("requirement `{child}` cannot have a parent of a different kind (`{parent}`)")]
    KindMismatch { child: String, parent: String },
    #[error("making `{0}` a child would create a cycle in the hierarchy")]
    HierarchyCycle(String),
    #[error("a model artifact must be linked to at least one requirement")]
    NoTargets,
    #[error("model artifact `{0}` already exists")]
    DuplicateArtifact(String),
    #[error("a risk level requires a risk category")]
    MissingRiskCategory,
    #[error("customer importance must lie in 1..=10, got {0}")]
    InvalidImportance(u8),
    #[error("`{0}` can only be fully verified during Global Evaluation")]
    GlobalOnlyAttribute(QualityAttribute),
    #[error("a conflict needs two requirements, or one plus an external note")]
    InsufficientConflictTargets,
    #[error("conflict `{0}` is already resolved")]
    AlreadyResolved(String),
    #[error("a resolution must describe how the conflict was settled")]
    EmptyResolution,
    #[error("requirements not fully verified on completeness/traceability/consistency: {}", .0.join(", "))]
    BlockedByGlobalVerification(Vec<String>),
    #[error("open conflicts must be resolved first: {}", .0.join(", "))]
    BlockedByOpenConflicts(Vec<String>),
    #[error("requirements and needs must trace to each other: {}", .0.join(", "))]
    BlockedByTraceability(Vec<String>),
    #[error("method `{method}` is not applicable to activity `{activity}`")]
    NotApplicable { activity: String, method: String },
    #[error("activity `{0}` belongs to a phase the session has not reached")]
    ActivityNotReached(String),
    #[error("session log is inconsistent: {0}")]
    CorruptSession(String),
}

impl WorkflowError {
    pub fn code(&self) -> &'static str {
        use WorkflowError::*;
        match self {
            MissingNeeds => "missing_needs",
            DuplicateNeedId(_) => "duplicate_need_id",
            InvalidNeed(_) => "invalid_need",
            PhaseViolation { .. } => "phase_violation",
            SessionDone => "session_done",
            UnknownRequirement(_) => "unknown_requirement",
            UnknownNeed(_) => "unknown_need",
            UnknownConflict(_) => "unknown_conflict",
            UnknownActivity(_) => "unknown_activity",
            UnknownMethod(_) => "unknown_method",
            UnknownAttribute(_) => "unknown_attribute",
            EmptyText => "empty_text",
            EmptyIncrementLabel => "empty_increment_label",
            KindMismatch { .. } => "kind_mismatch",
            HierarchyCycle(_) => "hierarchy_cycle",
            NoTargets => "no_targets",
            DuplicateArtifact(_) => "duplicate_artifact",
            MissingRiskCategory => "missing_risk_category",
            InvalidImportance(_) => "invalid_importance",
            GlobalOnlyAttribute(_) => "global_only_attribute",
            InsufficientConflictTargets => "insufficient_conflict_targets",
            AlreadyResolved(_) => "already_resolved",
            EmptyResolution => "empty_resolution",
            BlockedByGlobalVerification(_) => "blocked_by_global_verification",
            BlockedByOpenConflicts(_) => "blocked_by_open_conflicts",
            BlockedByTraceability(_) => "blocked_by_traceability",
            NotApplicable { .. } => "not_applicable",
            ActivityNotReached(_) => "activity_not_reached",
            CorruptSession(_) => "corrupt_session",
        }
    }

    pub fn class(&self) -> ErrorClass {
        use WorkflowError::*;
        match self {
            UnknownRequirement(_) | UnknownNeed(_) | UnknownConflict(_) | UnknownActivity(_)
            | UnknownMethod(_) => ErrorClass::NotFound,
            PhaseViolation { .. }
            | SessionDone
            | GlobalOnlyAttribute(_)
            | AlreadyResolved(_)
            | BlockedByGlobalVerification(_)
            | BlockedByOpenConflicts(_)
            | BlockedByTraceability(_)
            | ActivityNotReached(_) => ErrorClass::Gating,
            _ => ErrorClass::Domain,
        }
    }

    /// Ids the error is about, for structured error payloads.
    pub fn subjects(&self) -> Vec<String> {
        use WorkflowError::*;
        match self {
            DuplicateNeedId(id) | InvalidNeed(id) | UnknownRequirement(id) | UnknownNeed(id)
            | UnknownConflict(id) | UnknownActivity(id) | UnknownMethod(id)
            | UnknownAttribute(id) | HierarchyCycle(id) | DuplicateArtifact(id)
            | AlreadyResolved(id) | ActivityNotReached(id) => vec![id.clone()],
            KindMismatch { child, parent } => vec![child.clone(), parent.clone()],
            NotApplicable { activity, method } => vec![activity.clone(), method.clone()],
            BlockedByGlobalVerification(ids)
            | BlockedByOpenConflicts(ids)
            | BlockedByTraceability(ids) => ids.clone(),
            GlobalOnlyAttribute(a) => vec![a.as_str().to_owned()],
            _ => Vec::new(),
        }
    }
}
