#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;
use reqpath_core::kb::{Activity, Criterion, KbDocument, KnowledgeBase, Method, MethodGroup, Phase, PhaseTag};

pub fn method(id: &str) -> Method {
    Method {
        id: id.into(),
        name: id.to_uppercase(),
        description: String::new(),
        strengths: vec![format!("{id} is quick")],
        weaknesses: vec![],
        citations: vec![],
    }
}

pub fn criterion(id: &str) -> Criterion {
    Criterion {
        id: id.into(),
        name: id.to_uppercase(),
        description: String::new(),
    }
}

/// A random valid catalog: 1-4 criteria, 1-4 activities with 0-6 methods
/// each, and random (possibly empty or missing) groups.
pub fn random_kb(rng: &mut StdRng) -> KnowledgeBase {
    let n_criteria = rng.gen_range(1..=4);
    let n_methods = rng.gen_range(1..=8);
    let n_activities = rng.gen_range(1..=4);
    let criteria: Vec<Criterion> = (0..n_criteria).map(|i| criterion(&format!("c{i}"))).collect();
    let methods: Vec<Method> = (0..n_methods).map(|i| method(&format!("m{i}"))).collect();
    let mut activities = Vec::new();
    let mut groups = Vec::new();
    for a in 0..n_activities {
        let k = rng.gen_range(0..=n_methods.min(6));
        let mut pool: Vec<String> = methods.iter().map(|m| m.id.clone()).collect();
        pool.shuffle(rng);
        pool.truncate(k);
        let id = format!("a{a}");
        for c in &criteria {
            if !pool.is_empty() && rng.gen_bool(0.8) {
                let members: Vec<String> = pool.iter().filter(|_| rng.gen_bool(0.5)).cloned().collect();
                groups.push(MethodGroup {
                    activity: id.clone(),
                    criterion: c.id.clone(),
                    members,
                });
            }
        }
        activities.push(Activity {
            id,
            name: format!("Activity {a}"),
            objective: "objective".into(),
            phase: PhaseTag {
                phase: Phase::LocalAnalysis,
                rank: a as u32,
            },
            applicable_methods: pool,
        });
    }
    KnowledgeBase::from_document(KbDocument {
        version: "random".into(),
        criteria,
        methods,
        activities,
        groups,
    })
    .expect("generated KB is valid")
}
