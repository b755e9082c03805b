use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::KbDocument;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingCode {
    EmptyCatalog,
    EmptyId,
    DuplicateId,
    MissingName,
    MissingObjective,
    DuplicatePhaseRank,
    DuplicateApplicableMethod,
    DanglingMethodRef,
    DanglingActivityRef,
    DanglingCriterionRef,
    DuplicateGroup,
    DuplicateGroupMember,
    GroupMemberNotApplicable,
    EmptyGroup,
    NoApplicableMethods,
    UnmappedCriterion,
}

impl FindingCode {
    pub fn as_str(self) -> &'static str {
        match self {
            FindingCode::EmptyCatalog => "empty_catalog",
            FindingCode::EmptyId => "empty_id",
            FindingCode::DuplicateId => "duplicate_id",
            FindingCode::MissingName => "missing_name",
            FindingCode::MissingObjective => "missing_objective",
            FindingCode::DuplicatePhaseRank => "duplicate_phase_rank",
            FindingCode::DuplicateApplicableMethod => "duplicate_applicable_method",
            FindingCode::DanglingMethodRef => "dangling_method_ref",
            FindingCode::DanglingActivityRef => "dangling_activity_ref",
            FindingCode::DanglingCriterionRef => "dangling_criterion_ref",
            FindingCode::DuplicateGroup => "duplicate_group",
            FindingCode::DuplicateGroupMember => "duplicate_group_member",
            FindingCode::GroupMemberNotApplicable => "group_member_not_applicable",
            FindingCode::EmptyGroup => "empty_group",
            FindingCode::NoApplicableMethods => "no_applicable_methods",
            FindingCode::UnmappedCriterion => "unmapped_criterion",
        }
    }
}

impl fmt::Display for FindingCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub severity: Severity,
    pub code: FindingCode,
    pub message: String,
    pub subject: String,
}

/// Findings sorted by subject id, then code. Generation order is kept
/// for findings sharing both.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn error_count(&self) -> usize {
        self.findings
            .iter()
            .filter(|f| f.severity == Severity::Error)
            .count()
    }

    pub fn warning_count(&self) -> usize {
        self.findings.len() - self.error_count()
    }

    pub fn has_errors(&self) -> bool {
        self.error_count() > 0
    }

    pub fn errors(&self) -> impl Iterator<Item = &Finding> {
        self.findings
            .iter()
            .filter(|f| f.severity == Severity::Error)
    }
}

struct Collector(Vec<Finding>);

impl Collector {
    fn error(&mut self, code: FindingCode, subject: &str, message: String) {
        self.push(Severity::Error, code, subject, message);
    }

    fn warning(&mut self, code: FindingCode, subject: &str, message: String) {
        self.push(Severity::Warning, code, subject, message);
    }

    fn push(&mut self, severity: Severity, code: FindingCode, subject: &str, message: String) {
        self.0.push(Finding {
            severity,
            code,
            message,
            subject: subject.to_owned(),
        });
    }
}

fn check_ids<'a>(out: &mut Collector, kind: &str, ids: impl Iterator<Item = &'a str>) {
    let mut seen = HashSet::new();
    for id in ids {
        if id.trim().is_empty() {
            out.error(FindingCode::EmptyId, id, format!("{kind} with empty id"));
        } else if !seen.insert(id) {
            out.error(
                FindingCode::DuplicateId,
                id,
                format!("{kind} id `{id}` is declared more than once"),
            );
        }
    }
}

/// Lints a parsed KB document. Never fails; references may dangle.
pub fn validate_kb(doc: &KbDocument) -> ValidationReport {
    let mut out = Collector(Vec::new());

    if doc.activities.is_empty() {
        out.error(
            FindingCode::EmptyCatalog,
            "",
            "catalog declares no activities".into(),
        );
    }

    check_ids(&mut out, "criterion", doc.criteria.iter().map(|c| c.id.as_str()));
    check_ids(&mut out, "method", doc.methods.iter().map(|m| m.id.as_str()));
    check_ids(&mut out, "activity", doc.activities.iter().map(|a| a.id.as_str()));

    for m in &doc.methods {
        if m.name.trim().is_empty() {
            out.error(
                FindingCode::MissingName,
                &m.id,
                format!("method `{}` has an empty name", m.id),
            );
        }
    }

    let methods: HashSet<&str> = doc.methods.iter().map(|m| m.id.as_str()).collect();
    let criteria: HashSet<&str> = doc.criteria.iter().map(|c| c.id.as_str()).collect();
    let activities: HashMap<&str, &super::Activity> =
        doc.activities.iter().map(|a| (a.id.as_str(), a)).collect();

    let mut ranks = HashSet::new();
    for a in &doc.activities {
        if a.objective.trim().is_empty() {
            out.error(
                FindingCode::MissingObjective,
                &a.id,
                format!("activity `{}` has no stated objective", a.id),
            );
        }
        if !ranks.insert((a.phase.phase, a.phase.rank)) {
            out.error(
                FindingCode::DuplicatePhaseRank,
                &a.id,
                format!("rank {} is already used in phase {}", a.phase.rank, a.phase.phase),
            );
        }
        let mut seen = HashSet::new();
        for m in &a.applicable_methods {
            if !seen.insert(m.as_str()) {
                out.error(
                    FindingCode::DuplicateApplicableMethod,
                    &a.id,
                    format!("method `{m}` is listed twice for activity `{}`", a.id),
                );
            }
            if !methods.contains(m.as_str()) {
                out.error(
                    FindingCode::DanglingMethodRef,
                    &a.id,
                    format!("activity `{}` references unknown method `{m}`", a.id),
                );
            }
        }
        if a.applicable_methods.is_empty() {
            out.warning(
                FindingCode::NoApplicableMethods,
                &a.id,
                format!("activity `{}` has no applicable methods", a.id),
            );
        }
    }

    let mut group_keys = HashSet::new();
    for g in &doc.groups {
        let activity = activities.get(g.activity.as_str());
        if activity.is_none() {
            out.error(
                FindingCode::DanglingActivityRef,
                &g.activity,
                format!("group references unknown activity `{}`", g.activity),
            );
        }
        if !criteria.contains(g.criterion.as_str()) {
            out.error(
                FindingCode::DanglingCriterionRef,
                &g.activity,
                format!("group references unknown criterion `{}`", g.criterion),
            );
        }
        if !group_keys.insert((g.activity.as_str(), g.criterion.as_str())) {
            out.error(
                FindingCode::DuplicateGroup,
                &g.activity,
                format!(
                    "more than one `{}` group for activity `{}`",
                    g.criterion, g.activity
                ),
            );
        }
        if g.members.is_empty() {
            out.warning(
                FindingCode::EmptyGroup,
                &g.activity,
                format!("`{}` group of activity `{}` is empty", g.criterion, g.activity),
            );
        }
        let mut seen = HashSet::new();
        for m in &g.members {
            if !seen.insert(m.as_str()) {
                out.error(
                    FindingCode::DuplicateGroupMember,
                    &g.activity,
                    format!("method `{m}` appears twice in the `{}` group", g.criterion),
                );
            }
            if !methods.contains(m.as_str()) {
                out.error(
                    FindingCode::DanglingMethodRef,
                    &g.activity,
                    format!("`{}` group references unknown method `{m}`", g.criterion),
                );
            } else if let Some(a) = activity {
                if !a.applicable_methods.contains(m) {
                    out.error(
                        FindingCode::GroupMemberNotApplicable,
                        &g.activity,
                        format!(
                            "`{}` group member `{m}` is not applicable to activity `{}`",
                            g.criterion, g.activity
                        ),
                    );
                }
            }
        }
    }

    for a in &doc.activities {
        if a.applicable_methods.is_empty() {
            continue;
        }
        for c in &doc.criteria {
            if !group_keys.contains(&(a.id.as_str(), c.id.as_str())) {
                out.warning(
                    FindingCode::UnmappedCriterion,
                    &a.id,
                    format!("activity `{}` has no `{}` group", a.id, c.id),
                );
            }
        }
    }

    let mut findings = out.0;
    findings.sort_by(|x, y| {
        x.subject
            .cmp(&y.subject)
            .then_with(|| x.code.as_str().cmp(y.code.as_str()))
    });
    ValidationReport { findings }
}
