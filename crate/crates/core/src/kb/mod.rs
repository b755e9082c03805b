//! The method catalog: criteria, methods, activities and per-criterion
//! method groups.
//!
//! A [`KnowledgeBase`] can only be obtained through [`load_kb`],
//! [`KnowledgeBase::from_document`] or [`seed_kb`], each of which runs the
//! validator first. Once built it is immutable and can be shared freely
//! between threads.

mod seed;
mod validate;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use seed::{seed_kb, SEED_DOCUMENT};
pub use validate::{validate_kb, Finding, FindingCode, Severity, ValidationReport};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Criterion {
    pub id: String,
    pub name: String,
    pub description: String,
}

/// A catalogued method. The strength/weakness slots are mandatory in the
/// file format even when empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Method {
    pub id: String,
    pub name: String,
    pub description: String,
    pub strengths: Vec<String>,
    pub weaknesses: Vec<String>,
    pub citations: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    LocalAnalysis,
    GlobalEvaluation,
    BusinessConcerns,
}

impl Phase {
    pub const ALL: [Phase; 3] = [
        Phase::LocalAnalysis,
        Phase::GlobalEvaluation,
        Phase::BusinessConcerns,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::LocalAnalysis => "local_analysis",
            Phase::GlobalEvaluation => "global_evaluation",
            Phase::BusinessConcerns => "business_concerns",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseTag {
    pub phase: Phase,
    pub rank: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Activity {
    pub id: String,
    pub name: String,
    pub objective: String,
    pub phase: PhaseTag,
    /// Declaration order is the tie-break order used by the selection engine.
    pub applicable_methods: Vec<String>,
}

/// The methods of one activity that optimize one criterion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodGroup {
    pub activity: String,
    pub criterion: String,
    pub members: Vec<String>,
}

impl MethodGroup {
    pub fn contains(&self, method: &str) -> bool {
        self.members.iter().any(|m| m == method)
    }
}

/// Raw, unvalidated contents of a KB file.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KbDocument {
    pub version: String,
    pub criteria: Vec<Criterion>,
    pub methods: Vec<Method>,
    pub activities: Vec<Activity>,
    pub groups: Vec<MethodGroup>,
}

#[derive(Debug, Error)]
pub enum KbError {
    #[error("malformed knowledge base document at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("knowledge base failed validation with {} error(s)", .0.error_count())]
    Invalid(ValidationReport),
    #[error("unknown activity `{0}`")]
    UnknownActivity(String),
}

impl KbError {
    pub fn code(&self) -> &'static str {
        match self {
            KbError::Parse { .. } => "parse_error",
            KbError::Invalid(_) => "invalid_kb",
            KbError::UnknownActivity(_) => "unknown_activity",
        }
    }
}

/// A validated, immutable catalog.
#[derive(Debug, Clone)]
pub struct KnowledgeBase {
    doc: KbDocument,
    criteria: HashMap<String, usize>,
    methods: HashMap<String, usize>,
    activities: HashMap<String, usize>,
    groups: HashMap<(String, String), usize>,
}

impl PartialEq for KnowledgeBase {
    fn eq(&self, other: &Self) -> bool {
        self.doc == other.doc
    }
}

impl Eq for KnowledgeBase {}

impl Serialize for KnowledgeBase {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.doc.serialize(serializer)
    }
}

/// Parses and validates a KB document.
pub fn load_kb(source: &str) -> Result<KnowledgeBase, KbError> {
    let doc: KbDocument = serde_json::from_str(source).map_err(|e| KbError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    KnowledgeBase::from_document(doc)
}

impl KnowledgeBase {
    pub fn from_document(doc: KbDocument) -> Result<Self, KbError> {
        let report = validate_kb(&doc);
        if report.has_errors() {
            return Err(KbError::Invalid(report));
        }
        let index = |ids: Vec<&String>| -> HashMap<String, usize> {
            ids.into_iter()
                .enumerate()
                .map(|(i, id)| (id.clone(), i))
                .collect()
        };
        let criteria = index(doc.criteria.iter().map(|c| &c.id).collect());
        let methods = index(doc.methods.iter().map(|m| &m.id).collect());
        let activities = index(doc.activities.iter().map(|a| &a.id).collect());
        let groups = doc
            .groups
            .iter()
            .enumerate()
            .map(|(i, g)| ((g.activity.clone(), g.criterion.clone()), i))
            .collect();
        Ok(KnowledgeBase {
            doc,
            criteria,
            methods,
            activities,
            groups,
        })
    }

    pub fn version(&self) -> &str {
        &self.doc.version
    }

    pub fn document(&self) -> &KbDocument {
        &self.doc
    }

    pub fn criteria(&self) -> &[Criterion] {
        &self.doc.criteria
    }

    pub fn methods(&self) -> &[Method] {
        &self.doc.methods
    }

    pub fn activities(&self) -> &[Activity] {
        &self.doc.activities
    }

    pub fn groups(&self) -> &[MethodGroup] {
        &self.doc.groups
    }

    pub fn criterion(&self, id: &str) -> Option<&Criterion> {
        self.criteria.get(id).map(|&i| &self.doc.criteria[i])
    }

    pub fn method(&self, id: &str) -> Option<&Method> {
        self.methods.get(id).map(|&i| &self.doc.methods[i])
    }

    pub fn activity(&self, id: &str) -> Option<&Activity> {
        self.activities.get(id).map(|&i| &self.doc.activities[i])
    }

    pub fn group(&self, activity: &str, criterion: &str) -> Option<&MethodGroup> {
        self.groups
            .get(&(activity.to_owned(), criterion.to_owned()))
            .map(|&i| &self.doc.groups[i])
    }

    /// Position of a criterion in declaration order.
    pub fn criterion_position(&self, id: &str) -> Option<usize> {
        self.criteria.get(id).copied()
    }

    /// Position of a method in the catalog's declaration order.
    pub fn method_position(&self, id: &str) -> Option<usize> {
        self.methods.get(id).copied()
    }

    pub fn is_applicable(&self, activity: &str, method: &str) -> bool {
        self.activity(activity)
            .is_some_and(|a| a.applicable_methods.iter().any(|m| m == method))
    }

    /// Activities of one phase, in rank order.
    pub fn activities_in_phase(&self, phase: Phase) -> Vec<&Activity> {
        let mut out: Vec<&Activity> = self
            .doc
            .activities
            .iter()
            .filter(|a| a.phase.phase == phase)
            .collect();
        out.sort_by_key(|a| a.phase.rank);
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.doc).expect("KB document serializes")
    }
}

/// An activity with its methods resolved and its criterion groups attached.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ActivityView {
    pub activity: Activity,
    pub methods: Vec<Method>,
    pub groups: Vec<MethodGroup>,
}

pub fn query_activity(kb: &KnowledgeBase, activity_id: &str) -> Result<ActivityView, KbError> {
    let activity = kb
        .activity(activity_id)
        .ok_or_else(|| KbError::UnknownActivity(activity_id.to_owned()))?;
    let methods = activity
        .applicable_methods
        .iter()
        .filter_map(|m| kb.method(m).cloned())
        .collect();
    let groups = kb
        .criteria()
        .iter()
        .filter_map(|c| kb.group(&activity.id, &c.id).cloned())
        .collect();
    Ok(ActivityView {
        activity: activity.clone(),
        methods,
        groups,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> KbDocument {
        serde_json::from_str(
            r#"{
              "version": "t1",
              "criteria": [{"id": "cost", "name": "Cost", "description": ""}],
              "methods": [{"id": "m1", "name": "M1", "description": "", "strengths": [], "weaknesses": [], "citations": []}],
              "activities": [{"id": "a1", "name": "A1", "objective": "do it",
                              "phase": {"phase": "local_analysis", "rank": 1},
                              "applicable_methods": ["m1"]}],
              "groups": [{"activity": "a1", "criterion": "cost", "members": ["m1"]}]
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn loads_minimal_document() {
        let kb = KnowledgeBase::from_document(tiny()).unwrap();
        assert_eq!(kb.version(), "t1");
        assert!(kb.is_applicable("a1", "m1"));
        assert!(kb.group("a1", "cost").unwrap().contains("m1"));
    }

    #[test]
    fn parse_error_carries_position() {
        let err = load_kb("{\n  \"version\": 3,\n}").unwrap_err();
        match err {
            KbError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_strengths_slot_is_a_parse_error() {
        let src = serde_json::to_string(&tiny())
            .unwrap()
            .replace("\"strengths\":[],", "");
        assert!(matches!(load_kb(&src), Err(KbError::Parse { .. })));
    }

    #[test]
    fn dangling_group_member_rejected() {
        let mut doc = tiny();
        doc.groups[0].members.push("xyz".into());
        let Err(KbError::Invalid(report)) = KnowledgeBase::from_document(doc) else {
            panic!("expected validation failure");
        };
        assert!(report
            .findings
            .iter()
            .any(|f| f.code == FindingCode::DanglingMethodRef));
    }

    #[test]
    fn empty_catalog_rejected() {
        let mut doc = tiny();
        doc.activities.clear();
        doc.groups.clear();
        let Err(KbError::Invalid(report)) = KnowledgeBase::from_document(doc) else {
            panic!("expected validation failure");
        };
        assert!(report
            .findings
            .iter()
            .any(|f| f.code == FindingCode::EmptyCatalog));
    }

    #[test]
    fn query_unknown_activity() {
        let kb = KnowledgeBase::from_document(tiny()).unwrap();
        assert!(matches!(
            query_activity(&kb, "nonexistent"),
            Err(KbError::UnknownActivity(_))
        ));
    }
}
