use std::sync::OnceLock;

use super::{load_kb, KnowledgeBase};

/// The built-in catalog, in the KB file format.
pub const SEED_DOCUMENT: &str = include_str!("../../../../seed/xrgm.json");

/// Returns the built-in catalog: 14 activities, four criteria, and the
/// methods and criterion groups published for Elicitation, Risk Analysis
/// and the completeness path through Business Concerns.
pub fn seed_kb() -> KnowledgeBase {
    static SEED: OnceLock<KnowledgeBase> = OnceLock::new();
    SEED.get_or_init(|| load_kb(SEED_DOCUMENT).expect("built-in seed catalog must validate"))
        .clone()
}
