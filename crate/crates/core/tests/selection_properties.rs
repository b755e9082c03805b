mod common;

use std::collections::HashSet;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use reqpath_core::kb::{Activity, KbDocument, KnowledgeBase, MethodGroup, Phase, PhaseTag};
use reqpath_core::selection::{
    classify_scenario, coverage_vector, filter_methods, minimize_distinct, recommend_path, CriterionSet, MatchMode,
    MinimizeMode, Scenario, SelectionRequest,
};

use common::{criterion, method, random_kb};

/// Brute-force optimum: walk every assignment of the candidate product
/// with a mixed-radix counter.
fn brute_force_min(groups: &[Vec<String>]) -> usize {
    let mut digits = vec![0usize; groups.len()];
    let mut best = usize::MAX;
    loop {
        let used: HashSet<&String> = digits.iter().zip(groups).map(|(&d, g)| &g[d]).collect();
        best = best.min(used.len());
        let mut i = 0;
        loop {
            if i == digits.len() {
                return best;
            }
            digits[i] += 1;
            if digits[i] < groups[i].len() {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}

fn minimizer_instance(rng: &mut StdRng) -> (KnowledgeBase, Vec<String>) {
    let n_act = rng.gen_range(1..=6);
    let n_methods = rng.gen_range(1..=8);
    let methods: Vec<String> = (0..n_methods).map(|i| format!("m{i}")).collect();
    let mut activities = Vec::new();
    let mut groups = Vec::new();
    for a in 0..n_act {
        let mut pool = methods.clone();
        pool.shuffle(rng);
        pool.truncate(rng.gen_range(1..=n_methods.min(6)));
        let id = format!("a{a}");
        groups.push(MethodGroup {
            activity: id.clone(),
            criterion: "c".into(),
            members: pool.clone(),
        });
        activities.push(Activity {
            id,
            name: "x".into(),
            objective: "x".into(),
            phase: PhaseTag {
                phase: Phase::BusinessConcerns,
                rank: a as u32,
            },
            applicable_methods: pool,
        });
    }
    let ids = activities.iter().map(|a| a.id.clone()).collect();
    let kb = KnowledgeBase::from_document(KbDocument {
        version: "m".into(),
        criteria: vec![criterion("c")],
        methods: methods.iter().map(|m| method(m)).collect(),
        activities,
        groups,
    })
    .unwrap();
    (kb, ids)
}

#[test]
fn exact_minimizer_matches_brute_force() {
    let mut rng = StdRng::seed_from_u64(7);
    for _ in 0..400 {
        let (kb, ids) = minimizer_instance(&mut rng);
        let groups: Vec<Vec<String>> = ids.iter().map(|a| kb.group(a, "c").unwrap().members.clone()).collect();
        let exact = minimize_distinct(&kb, &ids, "c", MinimizeMode::Exact).unwrap();
        assert!(exact.optimal);
        assert_eq!(exact.distinct_methods.len(), brute_force_min(&groups));

        let greedy = minimize_distinct(&kb, &ids, "c", MinimizeMode::Greedy).unwrap();
        assert!(!greedy.optimal);
        assert!(greedy.distinct_methods.len() >= exact.distinct_methods.len());
        for result in [&exact, &greedy] {
            for (a, m) in &result.assignment {
                assert!(kb.group(a, "c").unwrap().contains(m));
            }
            let range: HashSet<&String> = result.assignment.values().collect();
            assert_eq!(range.len(), result.distinct_methods.len());
        }
    }
}

#[test]
fn filter_is_anti_monotone_in_criteria() {
    let mut rng = StdRng::seed_from_u64(11);
    for _ in 0..300 {
        let kb = random_kb(&mut rng);
        let mut ids: Vec<String> = kb.criteria().iter().map(|c| c.id.clone()).collect();
        ids.shuffle(&mut rng);
        for a in kb.activities() {
            let mut prev_all: Option<Vec<String>> = None;
            let mut prev_any: Option<Vec<String>> = None;
            for k in 0..=ids.len() {
                let set = CriterionSet::from_ids(&kb, &ids[..k]).unwrap();
                let all = filter_methods(&kb, &a.id, &set, MatchMode::All).unwrap();
                let any = filter_methods(&kb, &a.id, &set, MatchMode::Any).unwrap();
                if let Some(p) = &prev_all {
                    assert!(all.iter().all(|m| p.contains(m)));
                }
                if let Some(p) = &prev_any {
                    assert!(p.iter().all(|m| any.contains(m)));
                }
                prev_all = Some(all);
                prev_any = Some(any);
            }
        }
    }
}

fn permutations(items: &[String]) -> Vec<Vec<String>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, head.clone());
            out.push(p);
        }
    }
    out
}

#[test]
fn path_choices_are_lexicographically_maximal() {
    let mut rng = StdRng::seed_from_u64(13);
    for _ in 0..300 {
        let kb = random_kb(&mut rng);
        let mut priority: Vec<String> = kb.criteria().iter().map(|c| c.id.clone()).collect();
        priority.shuffle(&mut rng);
        priority.truncate(rng.gen_range(0..=priority.len()));
        let activities: Vec<String> = kb
            .activities()
            .iter()
            .filter(|a| !a.applicable_methods.is_empty())
            .map(|a| a.id.clone())
            .collect();
        let req = SelectionRequest {
            activities: activities.clone(),
            priority: priority.clone(),
            ..Default::default()
        };
        let result = recommend_path(&kb, &req).unwrap();
        assert_eq!(result.choices.len(), activities.len());
        let score = |a: &str, m: &str| -> Vec<bool> {
            let cov = coverage_vector(&kb, a, m).unwrap();
            priority.iter().map(|c| cov.satisfied.contains(c)).collect()
        };
        for choice in &result.choices {
            assert!(kb.is_applicable(&choice.activity, &choice.method));
            let chosen = score(&choice.activity, &choice.method);
            for m in &kb.activity(&choice.activity).unwrap().applicable_methods {
                let s = score(&choice.activity, m);
                assert!(s <= chosen, "{m} beats {}", choice.method);
                assert_eq!(choice.tied_alternatives.contains(m), s == chosen && *m != choice.method);
            }
        }
        // purity
        assert_eq!(recommend_path(&kb, &req).unwrap(), result);
    }
}

#[test]
fn full_coverage_method_wins_under_every_permutation() {
    let mut rng = StdRng::seed_from_u64(17);
    let mut checked = 0;
    for _ in 0..2000 {
        let kb = random_kb(&mut rng);
        let all = CriterionSet::all(&kb);
        let ids: Vec<String> = all.as_slice().to_vec();
        for a in kb.activities() {
            let Ok(class) = classify_scenario(&kb, &a.id) else {
                continue;
            };
            if class.value != Scenario::Ideal {
                continue;
            }
            checked += 1;
            for perm in permutations(&ids) {
                let req = SelectionRequest {
                    activities: vec![a.id.clone()],
                    priority: perm,
                    ..Default::default()
                };
                let choice = &recommend_path(&kb, &req).unwrap().choices[0];
                assert_eq!(choice.coverage.satisfied, all);
            }
        }
    }
    assert!(checked > 20, "too few ideal activities generated ({checked})");
}

#[test]
fn ideal_and_worst_are_exclusive() {
    let mut rng = StdRng::seed_from_u64(19);
    for _ in 0..500 {
        let kb = random_kb(&mut rng);
        for a in kb.activities() {
            let Ok(class) = classify_scenario(&kb, &a.id) else {
                continue;
            };
            let groups: Vec<&MethodGroup> = kb
                .criteria()
                .iter()
                .filter_map(|c| kb.group(&a.id, &c.id))
                .filter(|g| !g.members.is_empty())
                .collect();
            let common: Vec<&String> = groups[0]
                .members
                .iter()
                .filter(|m| groups.iter().all(|g| g.contains(m)))
                .collect();
            let disjoint = groups.len() >= 2
                && groups.iter().enumerate().all(|(i, g)| {
                    groups[i + 1..]
                        .iter()
                        .all(|h| g.members.iter().all(|m| !h.contains(m)))
                });
            let expected = if !common.is_empty() && groups.len() == kb.criteria().len() {
                Scenario::Ideal
            } else if disjoint {
                Scenario::Worst
            } else {
                Scenario::Normal
            };
            assert_eq!(class.value, expected);
            if groups.len() >= 2 {
                assert!(!(class.value == Scenario::Ideal && disjoint));
            }
        }
    }
}
