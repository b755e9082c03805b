//! Criteria-driven method selection over a [`KnowledgeBase`].
//!
//! Everything here is a pure function of its inputs.

mod explain;
mod minimize;
mod path;
mod scenario;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kb::KnowledgeBase;

pub use explain::{explain, explain_minimize, explain_path, ExplainTarget, Explanation, ExplanationEntry};
pub use minimize::{minimize_distinct, MinimizeMode, MinimizeResult, EXACT_SEARCH_BOUND};
pub use path::{recommend_path, Decision, PathChoice, PathResult, SelectionRequest, TieBreak};
pub use scenario::{classify_scenario, Scenario, ScenarioClass};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SelectionError {
    #[error("unknown activity `{0}`")]
    UnknownActivity(String),
    #[error("unknown criterion `{0}`")]
    UnknownCriterion(String),
    #[error("unknown method `{0}`")]
    UnknownMethod(String),
    #[error("method `{method}` is not applicable to activity `{activity}`")]
    NotApplicable { activity: String, method: String },
    #[error("criterion `{0}` appears more than once in the priority list")]
    DuplicatePriority(String),
    #[error("activity `{0}` has no criterion groups; its scenario is undefined")]
    NoCriteriaData(String),
    #[error("activity `{0}` has no candidate method")]
    UncoverableActivity(String),
    #[error("exact search over {product} assignments exceeds the bound of {bound}")]
    SearchBoundExceeded { product: u128, bound: u128 },
    #[error("result references `{0}`, which is not in the knowledge base")]
    DanglingReference(String),
}

impl SelectionError {
    pub fn code(&self) -> &'static str {
        match self {
            SelectionError::UnknownActivity(_) => "unknown_activity",
            SelectionError::UnknownCriterion(_) => "unknown_criterion",
            SelectionError::UnknownMethod(_) => "unknown_method",
            SelectionError::NotApplicable { .. } => "not_applicable",
            SelectionError::DuplicatePriority(_) => "duplicate_priority",
            SelectionError::NoCriteriaData(_) => "no_criteria_data",
            SelectionError::UncoverableActivity(_) => "uncoverable_activity",
            SelectionError::SearchBoundExceeded { .. } => "search_bound_exceeded",
            SelectionError::DanglingReference(_) => "dangling_reference",
        }
    }

    /// True for errors caused by an id the KB does not know.
    pub fn is_unknown_id(&self) -> bool {
        matches!(
            self,
            SelectionError::UnknownActivity(_)
                | SelectionError::UnknownCriterion(_)
                | SelectionError::UnknownMethod(_)
        )
    }
}

/// A set of criterion ids, kept in the KB's criterion declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CriterionSet(Vec<String>);

impl CriterionSet {
    pub fn empty() -> Self {
        CriterionSet(Vec::new())
    }

    /// Builds a set from ids, rejecting ids the KB does not declare.
    /// Duplicates collapse.
    pub fn from_ids<I, S>(kb: &KnowledgeBase, ids: I) -> Result<Self, SelectionError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut positions = Vec::new();
        for id in ids {
            let id = id.as_ref();
            let pos = kb
                .criterion_position(id)
                .ok_or_else(|| SelectionError::UnknownCriterion(id.to_owned()))?;
            positions.push(pos);
        }
        positions.sort_unstable();
        positions.dedup();
        Ok(CriterionSet(
            positions
                .into_iter()
                .map(|i| kb.criteria()[i].id.clone())
                .collect(),
        ))
    }

    /// Every criterion the KB declares.
    pub fn all(kb: &KnowledgeBase) -> Self {
        CriterionSet(kb.criteria().iter().map(|c| c.id.clone()).collect())
    }

    pub fn contains(&self, id: &str) -> bool {
        self.0.iter().any(|c| c == id)
    }

    pub fn is_superset(&self, other: &CriterionSet) -> bool {
        other.0.iter().all(|c| self.contains(c))
    }

    pub fn intersects(&self, other: &CriterionSet) -> bool {
        other.0.iter().any(|c| self.contains(c))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn as_slice(&self) -> &[String] {
        &self.0
    }
}

impl fmt::Display for CriterionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.0.join(", "))
    }
}

/// Which criteria one method satisfies for one activity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageVector {
    pub method: String,
    pub activity: String,
    pub satisfied: CriterionSet,
}

pub(crate) fn coverage_unchecked(kb: &KnowledgeBase, activity: &str, method: &str) -> CoverageVector {
    let satisfied = kb
        .criteria()
        .iter()
        .filter(|c| kb.group(activity, &c.id).is_some_and(|g| g.contains(method)))
        .map(|c| c.id.clone())
        .collect();
    CoverageVector {
        method: method.to_owned(),
        activity: activity.to_owned(),
        satisfied: CriterionSet(satisfied),
    }
}

pub(crate) fn require_activity<'a>(
    kb: &'a KnowledgeBase,
    activity: &str,
) -> Result<&'a crate::kb::Activity, SelectionError> {
    kb.activity(activity)
        .ok_or_else(|| SelectionError::UnknownActivity(activity.to_owned()))
}

pub(crate) fn require_applicable(
    kb: &KnowledgeBase,
    activity: &str,
    method: &str,
) -> Result<(), SelectionError> {
    require_activity(kb, activity)?;
    if kb.method(method).is_none() {
        return Err(SelectionError::UnknownMethod(method.to_owned()));
    }
    if !kb.is_applicable(activity, method) {
        return Err(SelectionError::NotApplicable {
            activity: activity.to_owned(),
            method: method.to_owned(),
        });
    }
    Ok(())
}

/// The criteria `method` satisfies for `activity`: those whose group for
/// the activity contains it.
pub fn coverage_vector(
    kb: &KnowledgeBase,
    activity: &str,
    method: &str,
) -> Result<CoverageVector, SelectionError> {
    require_applicable(kb, activity, method)?;
    Ok(coverage_unchecked(kb, activity, method))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    /// Coverage must include every requested criterion.
    #[default]
    All,
    /// Coverage must include at least one requested criterion.
    Any,
}

impl FromStr for MatchMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all" => Ok(MatchMode::All),
            "any" => Ok(MatchMode::Any),
            other => Err(format!("unknown match mode `{other}` (expected all or any)")),
        }
    }
}

/// Applicable methods of `activity` whose coverage matches `criteria`,
/// in declaration order.
pub fn filter_methods(
    kb: &KnowledgeBase,
    activity: &str,
    criteria: &CriterionSet,
    mode: MatchMode,
) -> Result<Vec<String>, SelectionError> {
    let act = require_activity(kb, activity)?;
    if let Some(bad) = criteria.iter().find(|c| kb.criterion(c).is_none()) {
        return Err(SelectionError::UnknownCriterion(bad.to_owned()));
    }
    Ok(act
        .applicable_methods
        .iter()
        .filter(|m| {
            let cov = coverage_unchecked(kb, activity, m);
            match mode {
                MatchMode::All => cov.satisfied.is_superset(criteria),
                MatchMode::Any => cov.satisfied.intersects(criteria),
            }
        })
        .cloned()
        .collect())
}

pub(crate) fn check_no_duplicates<'a>(
    ids: impl IntoIterator<Item = &'a String>,
) -> Result<(), SelectionError> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(SelectionError::DuplicatePriority(id.clone()));
        }
    }
    Ok(())
}
