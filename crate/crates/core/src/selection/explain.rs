use serde::{Deserialize, Serialize};

use super::{coverage_unchecked, CoverageVector, CriterionSet, Decision, MinimizeResult, PathResult, SelectionError};
use crate::kb::KnowledgeBase;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplanationEntry {
    pub activity: String,
    pub chosen: String,
    pub satisfied: CriterionSet,
    /// Every other applicable method, in declaration order.
    pub rejected: Vec<CoverageVector>,
    pub tie_break: Decision,
    pub strengths: Vec<String>,
    pub weaknesses: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Explanation {
    pub entries: Vec<ExplanationEntry>,
}

pub enum ExplainTarget<'a> {
    Path(&'a PathResult),
    Minimize(&'a MinimizeResult),
}

pub fn explain(kb: &KnowledgeBase, target: ExplainTarget<'_>) -> Result<Explanation, SelectionError> {
    match target {
        ExplainTarget::Path(p) => explain_path(kb, p),
        ExplainTarget::Minimize(m) => explain_minimize(kb, m),
    }
}

pub fn explain_path(kb: &KnowledgeBase, result: &PathResult) -> Result<Explanation, SelectionError> {
    let entries = result
        .choices
        .iter()
        .map(|c| entry(kb, &c.activity, &c.method, c.decided_by))
        .collect::<Result<_, _>>()?;
    Ok(Explanation { entries })
}

pub fn explain_minimize(kb: &KnowledgeBase, result: &MinimizeResult) -> Result<Explanation, SelectionError> {
    let decision = if result.optimal {
        Decision::MinimizedExact
    } else {
        Decision::MinimizedGreedy
    };
    let entries = result
        .assignment
        .iter()
        .map(|(a, m)| entry(kb, a, m, decision))
        .collect::<Result<_, _>>()?;
    Ok(Explanation { entries })
}

fn entry(kb: &KnowledgeBase, activity: &str, chosen: &str, tie_break: Decision) -> Result<ExplanationEntry, SelectionError> {
    let act = kb
        .activity(activity)
        .ok_or_else(|| SelectionError::DanglingReference(activity.to_owned()))?;
    let method = kb
        .method(chosen)
        .ok_or_else(|| SelectionError::DanglingReference(chosen.to_owned()))?;
    // coverage is recomputed rather than trusted from the result
    let satisfied = coverage_unchecked(kb, activity, chosen).satisfied;
    let rejected = act
        .applicable_methods
        .iter()
        .filter(|m| *m != chosen)
        .map(|m| coverage_unchecked(kb, activity, m))
        .collect();
    Ok(ExplanationEntry {
        activity: activity.to_owned(),
        chosen: chosen.to_owned(),
        satisfied,
        rejected,
        tie_break,
        strengths: method.strengths.clone(),
        weaknesses: method.weaknesses.clone(),
    })
}
