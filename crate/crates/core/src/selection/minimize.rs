use std::collections::{BTreeMap, HashSet};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{require_activity, SelectionError};
use crate::kb::KnowledgeBase;

/// Largest candidate product the exact search will enumerate.
pub const EXACT_SEARCH_BOUND: u128 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MinimizeMode {
    Exact,
    Greedy,
    /// Exact within [`EXACT_SEARCH_BOUND`], greedy beyond it.
    #[default]
    Auto,
}

impl FromStr for MinimizeMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(MinimizeMode::Exact),
            "greedy" => Ok(MinimizeMode::Greedy),
            "auto" => Ok(MinimizeMode::Auto),
            other => Err(format!("unknown minimize mode `{other}` (expected exact, greedy or auto)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinimizeResult {
    pub criterion: String,
    pub assignment: BTreeMap<String, String>,
    /// Range of `assignment`, in catalog declaration order.
    pub distinct_methods: Vec<String>,
    /// True iff produced by exact search.
    pub optimal: bool,
}

/// Assigns each activity one member of its `criterion` group so that the
/// number of distinct methods is as small as possible.
pub fn minimize_distinct(
    kb: &KnowledgeBase,
    activities: &[String],
    criterion: &str,
    mode: MinimizeMode,
) -> Result<MinimizeResult, SelectionError> {
    if kb.criterion(criterion).is_none() {
        return Err(SelectionError::UnknownCriterion(criterion.to_owned()));
    }

    let mut seen = HashSet::new();
    let mut order: Vec<&str> = Vec::new();
    let mut candidates: Vec<Vec<&str>> = Vec::new();
    for a in activities {
        let act = require_activity(kb, a)?;
        if !seen.insert(a.as_str()) {
            continue;
        }
        let group = kb
            .group(a, criterion)
            .filter(|g| !g.members.is_empty())
            .ok_or_else(|| SelectionError::UncoverableActivity(a.clone()))?;
        // candidate order follows the activity's declaration order
        let members: Vec<&str> = act
            .applicable_methods
            .iter()
            .filter(|m| group.contains(m))
            .map(String::as_str)
            .collect();
        order.push(a.as_str());
        candidates.push(members);
    }

    let product = candidates
        .iter()
        .try_fold(1u128, |acc, c| acc.checked_mul(c.len() as u128))
        .unwrap_or(u128::MAX);
    let use_exact = match mode {
        MinimizeMode::Exact if product > EXACT_SEARCH_BOUND => {
            return Err(SelectionError::SearchBoundExceeded {
                product,
                bound: EXACT_SEARCH_BOUND,
            })
        }
        MinimizeMode::Exact => true,
        MinimizeMode::Greedy => false,
        MinimizeMode::Auto => product <= EXACT_SEARCH_BOUND,
    };

    let picks = if use_exact {
        exact(&candidates)
    } else {
        greedy(kb, &candidates)
    };

    let assignment: BTreeMap<String, String> = order
        .iter()
        .zip(&picks)
        .map(|(a, m)| ((*a).to_owned(), (*m).to_owned()))
        .collect();
    let mut distinct: Vec<String> = picks
        .iter()
        .map(|m| (*m).to_owned())
        .collect::<HashSet<_>>()
        .into_iter()
        .collect();
    distinct.sort_by_key(|m| kb.method_position(m));

    Ok(MinimizeResult {
        criterion: criterion.to_owned(),
        assignment,
        distinct_methods: distinct,
        optimal: use_exact,
    })
}

/// Depth-first enumeration of the candidate product. Branches whose
/// partial distinct count already reaches the best total are cut; the
/// first optimum in enumeration order is kept.
fn exact<'a>(candidates: &[Vec<&'a str>]) -> Vec<&'a str> {
    struct Search<'c, 'a> {
        candidates: &'c [Vec<&'a str>],
        current: Vec<&'a str>,
        best: Option<(usize, Vec<&'a str>)>,
    }

    impl<'a> Search<'_, 'a> {
        fn distinct(&self) -> usize {
            self.current.iter().collect::<HashSet<_>>().len()
        }

        fn run(&mut self, depth: usize) {
            let used = self.distinct();
            if let Some((best, _)) = &self.best {
                if used >= *best {
                    return;
                }
            }
            if depth == self.candidates.len() {
                self.best = Some((used, self.current.clone()));
                return;
            }
            for &m in &self.candidates[depth] {
                self.current.push(m);
                self.run(depth + 1);
                self.current.pop();
            }
        }
    }

    let mut search = Search {
        candidates,
        current: Vec::with_capacity(candidates.len()),
        best: None,
    };
    search.run(0);
    search.best.map(|(_, picks)| picks).unwrap_or_default()
}

/// Repeatedly takes the method covering the most unassigned activities;
/// ties go to the method declared first in the catalog.
fn greedy<'a>(kb: &KnowledgeBase, candidates: &[Vec<&'a str>]) -> Vec<&'a str> {
    let mut picks: Vec<Option<&'a str>> = vec![None; candidates.len()];
    while picks.iter().any(Option::is_none) {
        let mut counts: BTreeMap<usize, (&'a str, usize)> = BTreeMap::new();
        for (i, members) in candidates.iter().enumerate() {
            if picks[i].is_some() {
                continue;
            }
            for &m in members {
                let pos = kb.method_position(m).unwrap_or(usize::MAX);
                counts.entry(pos).or_insert((m, 0)).1 += 1;
            }
        }
        let (_, (method, _)) = counts
            .iter()
            .fold(None::<(usize, (&'a str, usize))>, |best, (&pos, &(m, n))| match best {
                Some((_, (_, bn))) if bn >= n => best,
                _ => Some((pos, (m, n))),
            })
            .expect("an unassigned activity always has candidates");
        for (i, members) in candidates.iter().enumerate() {
            if picks[i].is_none() && members.contains(&method) {
                picks[i] = Some(method);
            }
        }
    }
    picks.into_iter().map(|p| p.expect("assigned")).collect()
}
