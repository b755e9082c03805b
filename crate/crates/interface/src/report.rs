//! Decision reports rendered as Markdown.
//!
//! A report records the method path an engineer chose (with the coverage
//! behind each choice) and, for a session, where the workflow stands.
//! Rendering is a pure function of its inputs; the timestamp is passed in.

use chrono::{DateTime, SecondsFormat, Utc};
use reqpath_core::selection::{classify_scenario, explain_path, PathResult, Scenario, SelectionError};
use reqpath_core::workflow::{ChecklistResult, SessionPhase, WorkflowSession};
use reqpath_core::KnowledgeBase;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("a report needs a session, a method path, or both")]
    NothingToReport,
    #[error(transparent)]
    Selection(#[from] SelectionError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Section {
    pub heading: String,
    /// Markdown lines, rendered in order.
    pub rows: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Report {
    pub title: String,
    pub generated_at: DateTime<Utc>,
    pub sections: Vec<Section>,
}

impl Report {
    pub fn render(&self) -> String {
        let mut out = format!(
            "# {}\n\nGenerated {}\n",
            self.title,
            self.generated_at.to_rfc3339_opts(SecondsFormat::Secs, true)
        );
        for s in &self.sections {
            out.push_str(&format!("\n## {}\n\n", s.heading));
            for row in &s.rows {
                out.push_str(row);
                out.push('\n');
            }
        }
        out
    }
}

pub fn build_report(
    kb: &KnowledgeBase,
    session: Option<&WorkflowSession>,
    path: Option<&PathResult>,
    generated_at: DateTime<Utc>,
) -> Result<Report, ReportError> {
    let title = match (session, path) {
        (None, None) => return Err(ReportError::NothingToReport),
        (Some(s), _) => format!("Requirements generation report: session {}", s.id()),
        (None, Some(_)) => "Method path report".to_owned(),
    };
    let mut sections = Vec::new();
    if let Some(s) = session {
        sections.extend(session_sections(s));
    }
    if let Some(p) = path {
        sections.extend(path_sections(kb, p)?);
    }
    Ok(Report {
        title,
        generated_at,
        sections,
    })
}

fn method_name(kb: &KnowledgeBase, id: &str) -> String {
    kb.method(id).map_or_else(|| id.to_owned(), |m| m.name.clone())
}

fn activity_name(kb: &KnowledgeBase, id: &str) -> String {
    kb.activity(id).map_or_else(|| id.to_owned(), |a| a.name.clone())
}

fn list_or(items: &[String], empty: &str) -> String {
    if items.is_empty() {
        empty.to_owned()
    } else {
        items.join(", ")
    }
}

fn path_sections(kb: &KnowledgeBase, path: &PathResult) -> Result<Vec<Section>, ReportError> {
    let explanation = explain_path(kb, path)?;
    let mut rows = vec![
        "| # | Activity | Method | Satisfied criteria | Decided by |".to_owned(),
        "|---|---|---|---|---|".to_owned(),
    ];
    for (i, c) in path.choices.iter().enumerate() {
        rows.push(format!(
            "| {} | {} | {} | {} | {} |",
            i + 1,
            activity_name(kb, &c.activity),
            method_name(kb, &c.method),
            list_or(c.coverage.satisfied.as_slice(), "none"),
            c.decided_by.describe(),
        ));
    }
    rows.push(String::new());
    rows.push(format!("Distinct methods on the path: {}", path.distinct_method_count));
    let mut sections = vec![Section {
        heading: "Method path".into(),
        rows,
    }];

    for (choice, entry) in path.choices.iter().zip(&explanation.entries) {
        let scenario = match classify_scenario(kb, &choice.activity) {
            Ok(class) => match class.value {
                Scenario::Ideal => "ideal",
                Scenario::Normal => "normal",
                Scenario::Worst => "worst",
            },
            Err(SelectionError::NoCriteriaData(_)) => "undefined (no criterion groups)",
            Err(e) => return Err(e.into()),
        };
        let tied: Vec<String> = choice.tied_alternatives.iter().map(|m| method_name(kb, m)).collect();
        let mut rows = vec![
            format!("- Chosen method: {}", method_name(kb, &entry.chosen)),
            format!("- Satisfied criteria: {}", list_or(entry.satisfied.as_slice(), "none")),
            format!("- Decision: {}", entry.tie_break.describe()),
            format!("- Scenario: {scenario}"),
            format!("- Tied alternatives: {}", list_or(&tied, "none")),
            format!("- Strengths: {}", list_or(&entry.strengths, "none recorded")),
            format!("- Weaknesses: {}", list_or(&entry.weaknesses, "none recorded")),
        ];
        if !entry.rejected.is_empty() {
            rows.push("- Other applicable methods:".into());
            for cov in &entry.rejected {
                rows.push(format!(
                    "  - {}: {}",
                    method_name(kb, &cov.method),
                    list_or(cov.satisfied.as_slice(), "no criteria")
                ));
            }
        }
        sections.push(Section {
            heading: format!("Activity: {}", activity_name(kb, &choice.activity)),
            rows,
        });
    }
    Ok(sections)
}

fn session_sections(s: &WorkflowSession) -> Vec<Section> {
    let state = s.phase_state();
    let mut status = vec![
        format!("- Session: {}", s.id()),
        format!("- Knowledge base: {}", s.kb_version()),
        format!("- Phase: {}", state.phase),
        format!("- Local analysis iteration: {}", state.local_iteration),
    ];
    if let Some(cursor) = &state.business_cursor {
        status.push(format!("- Current business activity: {cursor}"));
    }
    status.push(format!(
        "- Requirements: {} in {} increment(s)",
        s.requirements().len(),
        s.increments().len()
    ));
    status.push(format!("- Needs: {}", s.needs().len()));
    status.push(format!(
        "- Global validation requested: {}",
        if s.global_validation_requested() { "yes" } else { "no" }
    ));
    let mut sections = vec![Section {
        heading: "Workflow status".into(),
        rows: status,
    }];

    let checklist: Option<ChecklistResult> = if s.phase() == SessionPhase::LocalAnalysis {
        s.evaluate_checklist().ok()
    } else {
        s.last_checklist().cloned()
    };
    let rows = match checklist {
        Some(c) => {
            let mut rows: Vec<String> = c
                .items()
                .iter()
                .map(|(name, item)| {
                    format!("- [{}] {}: {}", if item.passed { "x" } else { " " }, name, item.evidence)
                })
                .collect();
            rows.push(String::new());
            rows.push(format!("Exit criteria {}", if c.pass { "met" } else { "not met" }));
            rows
        }
        None => vec!["No checklist evaluated.".into()],
    };
    sections.push(Section {
        heading: "Local analysis exit checklist".into(),
        rows,
    });

    let open: Vec<String> = s
        .open_conflicts()
        .map(|c| {
            let mut line = format!("- {} ({}): {}", c.id, c.requirement_ids.join(", "), c.description);
            if let Some(note) = &c.external_note {
                line.push_str(&format!(" [external: {note}]"));
            }
            line
        })
        .collect();
    sections.push(Section {
        heading: "Open conflicts".into(),
        rows: if open.is_empty() { vec!["None.".into()] } else { open },
    });

    let (unlinked, untraced) = s.trace_gaps();
    let mut gaps = Vec::new();
    if !unlinked.is_empty() {
        gaps.push(format!("- Requirements without needs: {}", unlinked.join(", ")));
    }
    if !untraced.is_empty() {
        gaps.push(format!("- Needs without requirements: {}", untraced.join(", ")));
    }
    sections.push(Section {
        heading: "Traceability".into(),
        rows: if gaps.is_empty() { vec!["No gaps.".into()] } else { gaps },
    });

    let active = s.active_methods();
    if !active.is_empty() {
        sections.push(Section {
            heading: "Methods in use".into(),
            rows: active.iter().map(|(a, m)| format!("- {a}: {m}")).collect(),
        });
    }
    sections
}
