use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{
    check_no_duplicates, coverage_unchecked, require_activity, require_applicable, CoverageVector,
    SelectionError,
};
use crate::kb::KnowledgeBase;

/// How methods with equal priority scores are ordered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    /// Prefer the method satisfying more criteria overall, then the one
    /// declared first.
    #[default]
    CoverageBreadth,
    /// Prefer the method declared first.
    DeclarationOrder,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SelectionRequest {
    pub activities: Vec<String>,
    /// Highest priority first.
    pub priority: Vec<String>,
    #[serde(default)]
    pub pinned: BTreeMap<String, String>,
    #[serde(default)]
    pub tie_break: TieBreak,
}

/// What settled the choice for one activity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Pinned,
    UniqueBest,
    CoverageBreadth,
    DeclarationOrder,
    MinimizedExact,
    MinimizedGreedy,
}

impl Decision {
    pub fn describe(self) -> &'static str {
        match self {
            Decision::Pinned => "pinned by the engineer",
            Decision::UniqueBest => "highest priority score",
            Decision::CoverageBreadth => "tie broken by number of criteria satisfied",
            Decision::DeclarationOrder => "tie broken by declaration order",
            Decision::MinimizedExact => "minimal distinct-method assignment (exact)",
            Decision::MinimizedGreedy => "distinct-method assignment (greedy)",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathChoice {
    pub activity: String,
    pub method: String,
    pub coverage: CoverageVector,
    /// Other methods with the same priority score, in declaration order.
    pub tied_alternatives: Vec<String>,
    pub decided_by: Decision,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PathResult {
    pub choices: Vec<PathChoice>,
    pub distinct_method_count: usize,
}

fn validate(kb: &KnowledgeBase, request: &SelectionRequest) -> Result<(), SelectionError> {
    check_no_duplicates(&request.priority)?;
    for c in &request.priority {
        if kb.criterion(c).is_none() {
            return Err(SelectionError::UnknownCriterion(c.clone()));
        }
    }
    for a in &request.activities {
        require_activity(kb, a)?;
    }
    for (a, m) in &request.pinned {
        require_applicable(kb, a, m)?;
    }
    Ok(())
}

/// Picks one method per requested activity.
///
/// Each applicable method is scored by the vector of booleans "satisfies
/// priority[0]", "satisfies priority[1]", ..., compared lexicographically.
/// Pins override scoring.
pub fn recommend_path(kb: &KnowledgeBase, request: &SelectionRequest) -> Result<PathResult, SelectionError> {
    validate(kb, request)?;

    let mut choices = Vec::with_capacity(request.activities.len());
    for activity in &request.activities {
        if let Some(method) = request.pinned.get(activity) {
            choices.push(PathChoice {
                activity: activity.clone(),
                method: method.clone(),
                coverage: coverage_unchecked(kb, activity, method),
                tied_alternatives: Vec::new(),
                decided_by: Decision::Pinned,
            });
            continue;
        }
        choices.push(choose(kb, activity, &request.priority, request.tie_break)?);
    }

    let distinct: HashSet<&str> = choices.iter().map(|c| c.method.as_str()).collect();
    let distinct_method_count = distinct.len();
    Ok(PathResult {
        choices,
        distinct_method_count,
    })
}

fn choose(
    kb: &KnowledgeBase,
    activity: &str,
    priority: &[String],
    tie_break: TieBreak,
) -> Result<PathChoice, SelectionError> {
    let act = require_activity(kb, activity)?;
    if act.applicable_methods.is_empty() {
        return Err(SelectionError::UncoverableActivity(activity.to_owned()));
    }

    let scored: Vec<(CoverageVector, Vec<bool>)> = act
        .applicable_methods
        .iter()
        .map(|m| {
            let cov = coverage_unchecked(kb, activity, m);
            let score = priority.iter().map(|c| cov.satisfied.contains(c)).collect();
            (cov, score)
        })
        .collect();

    let best_score = scored.iter().map(|(_, s)| s).max().expect("non-empty").clone();
    let tied: Vec<&CoverageVector> = scored
        .iter()
        .filter(|(_, s)| *s == best_score)
        .map(|(c, _)| c)
        .collect();

    let (winner, decided_by) = if tied.len() == 1 {
        (tied[0], Decision::UniqueBest)
    } else {
        match tie_break {
            TieBreak::DeclarationOrder => (tied[0], Decision::DeclarationOrder),
            TieBreak::CoverageBreadth => {
                let widest = tied.iter().map(|c| c.satisfied.len()).max().expect("non-empty");
                let mut widest_iter = tied.iter().filter(|c| c.satisfied.len() == widest);
                let first = widest_iter.next().expect("non-empty");
                let decided = if widest_iter.next().is_some() {
                    Decision::DeclarationOrder
                } else {
                    Decision::CoverageBreadth
                };
                (*first, decided)
            }
        }
    };

    Ok(PathChoice {
        activity: activity.to_owned(),
        method: winner.method.clone(),
        coverage: winner.clone(),
        tied_alternatives: tied
            .iter()
            .filter(|c| c.method != winner.method)
            .map(|c| c.method.clone())
            .collect(),
        decided_by,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::seed_kb;

    fn request(activities: &[&str], priority: &[&str]) -> SelectionRequest {
        SelectionRequest {
            activities: activities.iter().map(|s| s.to_string()).collect(),
            priority: priority.iter().map(|s| s.to_string()).collect(),
            ..Default::default()
        }
    }

    #[test]
    fn time_then_cost_picks_criticality_analysis() {
        let kb = seed_kb();
        let result = recommend_path(&kb, &request(&["risk_analysis"], &["time", "cost"])).unwrap();
        assert_eq!(result.choices[0].method, "criticality_analysis");
        assert_eq!(result.choices[0].decided_by, Decision::UniqueBest);
        assert!(result.choices[0].tied_alternatives.is_empty());
    }

    #[test]
    fn three_criteria_pick_monte_carlo() {
        let kb = seed_kb();
        let req = request(&["risk_analysis"], &["personnel", "time", "completeness"]);
        assert_eq!(
            recommend_path(&kb, &req).unwrap().choices[0].method,
            "monte_carlo_simulation"
        );
    }

    #[test]
    fn completeness_path() {
        let kb = seed_kb();
        let req = request(
            &[
                "risk_analysis",
                "cost_estimation",
                "schedule_estimation",
                "price_analysis",
                "tradeoff_analysis",
            ],
            &["completeness"],
        );
        let result = recommend_path(&kb, &req).unwrap();
        let methods: Vec<&str> = result.choices.iter().map(|c| c.method.as_str()).collect();
        assert_eq!(
            methods,
            ["monte_carlo_simulation", "cocomo_ii", "pert", "comparative_price_analysis", "pmi"]
        );
        assert_eq!(result.choices[0].decided_by, Decision::CoverageBreadth);
        assert_eq!(
            result.choices[0].tied_alternatives,
            ["fault_tree_analysis", "event_tree_analysis"]
        );
        assert_eq!(
            result.choices[4].tied_alternatives,
            ["decision_analysis", "internal_rate_of_return", "net_present_value"]
        );
        assert_eq!(result.choices[4].decided_by, Decision::DeclarationOrder);
        assert_eq!(result.distinct_method_count, 5);
    }

    #[test]
    fn strict_declaration_order_is_available() {
        let kb = seed_kb();
        let mut req = request(&["risk_analysis"], &["completeness"]);
        req.tie_break = TieBreak::DeclarationOrder;
        let choice = &recommend_path(&kb, &req).unwrap().choices[0];
        assert_eq!(choice.method, "fault_tree_analysis");
        assert_eq!(
            choice.tied_alternatives,
            ["event_tree_analysis", "monte_carlo_simulation"]
        );
    }

    #[test]
    fn pin_overrides_score() {
        let kb = seed_kb();
        let mut req = request(&["risk_analysis"], &["time"]);
        req.pinned.insert("risk_analysis".into(), "fmeca".into());
        let choice = &recommend_path(&kb, &req).unwrap().choices[0];
        assert_eq!(choice.method, "fmeca");
        assert_eq!(choice.decided_by, Decision::Pinned);
        assert!(!choice.coverage.satisfied.contains("time"));
    }

    #[test]
    fn request_errors() {
        let kb = seed_kb();
        assert_eq!(
            recommend_path(&kb, &request(&["market_analysis"], &["time"])),
            Err(SelectionError::UncoverableActivity("market_analysis".into()))
        );
        assert_eq!(
            recommend_path(&kb, &request(&["risk_analysis"], &["time", "time"])),
            Err(SelectionError::DuplicatePriority("time".into()))
        );
        assert_eq!(
            recommend_path(&kb, &request(&["risk_analysis"], &["bogus"])),
            Err(SelectionError::UnknownCriterion("bogus".into()))
        );
        let mut req = request(&["risk_analysis"], &["time"]);
        req.pinned.insert("risk_analysis".into(), "interviews".into());
        assert!(matches!(
            recommend_path(&kb, &req),
            Err(SelectionError::NotApplicable { .. })
        ));
    }

    #[test]
    fn pin_rescues_uncoverable_activity_only_if_applicable() {
        let kb = seed_kb();
        let mut req = request(&["market_analysis"], &[]);
        req.pinned.insert("market_analysis".into(), "interviews".into());
        assert!(matches!(
            recommend_path(&kb, &req),
            Err(SelectionError::NotApplicable { .. })
        ));
    }

    #[test]
    fn empty_request_gives_empty_path() {
        let result = recommend_path(&seed_kb(), &SelectionRequest::default()).unwrap();
        assert!(result.choices.is_empty());
        assert_eq!(result.distinct_method_count, 0);
    }
}
