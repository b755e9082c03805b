use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{require_activity, SelectionError};
use crate::kb::KnowledgeBase;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Some method sits in every criterion group.
    Ideal,
    /// Groups overlap partially.
    Normal,
    /// Every group is disjoint from every other.
    Worst,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioClass {
    pub value: Scenario,
    /// One line per criterion whose group is missing or empty.
    pub warnings: Vec<String>,
}

/// Classifies how the activity's non-empty criterion groups intersect.
///
/// With `G` the non-empty groups: ideal when their common intersection is
/// non-empty and every KB criterion has one; worst when there are at least
/// two and they are pairwise disjoint; normal otherwise.
pub fn classify_scenario(kb: &KnowledgeBase, activity: &str) -> Result<ScenarioClass, SelectionError> {
    require_activity(kb, activity)?;

    let mut groups: Vec<HashSet<&str>> = Vec::new();
    let mut warnings = Vec::new();
    for c in kb.criteria() {
        match kb.group(activity, &c.id) {
            Some(g) if !g.members.is_empty() => {
                groups.push(g.members.iter().map(String::as_str).collect())
            }
            Some(_) => warnings.push(format!("criterion `{}` has an empty group", c.id)),
            None => warnings.push(format!("criterion `{}` has no group", c.id)),
        }
    }
    if groups.is_empty() {
        return Err(SelectionError::NoCriteriaData(activity.to_owned()));
    }

    let common = groups[1..]
        .iter()
        .fold(groups[0].clone(), |acc, g| acc.intersection(g).copied().collect());
    let pairwise_disjoint = groups
        .iter()
        .enumerate()
        .all(|(i, a)| groups[i + 1..].iter().all(|b| a.is_disjoint(b)));

    let value = if !common.is_empty() && groups.len() == kb.criteria().len() {
        Scenario::Ideal
    } else if groups.len() >= 2 && pairwise_disjoint {
        Scenario::Worst
    } else {
        Scenario::Normal
    };
    Ok(ScenarioClass { value, warnings })
}
