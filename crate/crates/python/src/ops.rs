//! The binding surface as plain Rust over JSON values, so it can be tested
//! without an interpreter.

use chrono::Utc;
use reqpath_core::kb::{query_activity, validate_kb, KbDocument, KnowledgeBase};
use reqpath_core::selection::{
    classify_scenario, explain_minimize, explain_path, filter_methods, minimize_distinct, recommend_path,
    CriterionSet, MatchMode, MinimizeMode, SelectionRequest,
};
use reqpath_core::workflow::{Command, Journal, LogEntry, NeedRecord};
use serde::Serialize;
use serde_json::{json, Value};

/// An error code plus a message; surfaces in Python as `ReqpathError`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BindError {
    pub code: String,
    pub message: String,
}

impl BindError {
    fn new(code: &str, message: impl Into<String>) -> Self {
        BindError {
            code: code.into(),
            message: message.into(),
        }
    }

    fn invalid(e: impl std::fmt::Display) -> Self {
        BindError::new("invalid_argument", e.to_string())
    }
}

macro_rules! coded {
    ($($t:ty),*) => {$(
        impl From<$t> for BindError {
            fn from(e: $t) -> Self {
                BindError::new(e.code(), e.to_string())
            }
        }
    )*};
}

coded!(
    reqpath_core::kb::KbError,
    reqpath_core::selection::SelectionError,
    reqpath_core::workflow::WorkflowError
);

pub type Result<T> = std::result::Result<T, BindError>;

pub fn to_value(v: &impl Serialize) -> Value {
    serde_json::to_value(v).expect("core types serialize to JSON")
}

/// Validation findings for a catalog document. Parse failures are reported
/// as an error rather than a finding.
pub fn validate_document(source: &str) -> Result<Value> {
    let doc: KbDocument =
        serde_json::from_str(source).map_err(|e| BindError::new("malformed_document", e.to_string()))?;
    let report = validate_kb(&doc);
    Ok(json!({
        "valid": report.error_count() == 0,
        "errors": report.error_count(),
        "findings": to_value(&report.findings),
    }))
}

pub fn activity(kb: &KnowledgeBase, id: &str) -> Result<Value> {
    Ok(to_value(&query_activity(kb, id)?))
}

pub fn scenario(kb: &KnowledgeBase, activity: &str) -> Result<Value> {
    Ok(to_value(&classify_scenario(kb, activity)?))
}

pub fn filter(kb: &KnowledgeBase, activity: &str, criteria: &[String], mode: &str) -> Result<Vec<String>> {
    let mode: MatchMode = mode.parse().map_err(|e: String| BindError::new("invalid_mode", e))?;
    let set = CriterionSet::from_ids(kb, criteria)?;
    Ok(filter_methods(kb, activity, &set, mode)?)
}

/// `request` has the same shape as the HTTP `/select/path` body.
pub fn path(kb: &KnowledgeBase, request: Value) -> Result<Value> {
    let request: SelectionRequest = serde_json::from_value(request).map_err(BindError::invalid)?;
    let result = recommend_path(kb, &request)?;
    let explanation = explain_path(kb, &result)?;
    let mut out = to_value(&result);
    out["explanation"] = to_value(&explanation);
    Ok(out)
}

pub fn minimize(kb: &KnowledgeBase, activities: &[String], criterion: &str, mode: &str) -> Result<Value> {
    let mode: MinimizeMode = serde_json::from_value(json!(mode)).map_err(BindError::invalid)?;
    let result = minimize_distinct(kb, activities, criterion, mode)?;
    let explanation = explain_minimize(kb, &result)?;
    let mut out = to_value(&result);
    out["explanation"] = to_value(&explanation);
    Ok(out)
}

pub fn create_session(kb: &KnowledgeBase, id: &str, needs: Value) -> Result<Journal> {
    let needs: Vec<NeedRecord> = serde_json::from_value(needs).map_err(BindError::invalid)?;
    Ok(Journal::create(kb, id, needs, None)?)
}

/// Parses a command object (`{"op": ..., ...}`). A method assignment
/// without `at` is stamped with the current time.
pub fn parse_command(mut command: Value) -> Result<Command> {
    if command["op"] == "assign_method" && command.get("at").is_none() {
        command["at"] = json!(Utc::now());
    }
    serde_json::from_value(command).map_err(BindError::invalid)
}

pub fn execute(journal: &mut Journal, kb: &KnowledgeBase, command: Value, request_id: Option<String>) -> Result<Value> {
    let command = parse_command(command)?;
    Ok(to_value(&journal.execute(kb, command, request_id)?))
}

/// The exit checklist as it stands now in local analysis, otherwise the
/// one recorded when the session left it.
pub fn checklist(journal: &Journal) -> Result<Value> {
    let session = journal.session();
    match session.evaluate_checklist() {
        Ok(c) => Ok(to_value(&c)),
        Err(e) => session
            .last_checklist()
            .map(to_value)
            .ok_or_else(|| BindError::from(e)),
    }
}

pub fn replay(kb: &KnowledgeBase, log: &str) -> Result<Journal> {
    let log: Vec<LogEntry> = serde_json::from_str(log).map_err(BindError::invalid)?;
    Ok(Journal::replay(kb, log)?)
}
