//! Decision support for an objectives-driven requirements generation
//! process.
//!
//! * [`kb`] holds the catalog of activities, methods, criteria and
//!   per-criterion method groups, along with its loader and validator.
//! * [`selection`] filters methods by criteria, classifies how an
//!   activity's criterion groups overlap, recommends a method path under a
//!   criteria priority, and minimizes the number of distinct methods used.
//! * [`workflow`] enforces the Local Analysis / Global Analysis process:
//!   exit-criteria gating, verification caps, conflicts and an
//!   event-sourced operation journal.

pub mod kb;
pub mod selection;
pub mod workflow;

pub use kb::{load_kb, query_activity, seed_kb, validate_kb, KbError, KnowledgeBase};
