use std::collections::{BTreeMap, HashMap, HashSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::types::*;
use super::WorkflowError;
use crate::kb::{KnowledgeBase, Phase};

const PRIORITIZATION: &str = "prioritization";

/// Live state of one requirements-generation engagement.
///
/// Every mutation validates fully before touching state, so a failed
/// operation leaves the session unchanged. `version` counts applied
/// operations, creation included.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkflowSession {
    id: String,
    kb_version: String,
    version: u64,
    phase_state: PhaseState,
    needs: Vec<NeedRecord>,
    increments: Vec<IncrementSet>,
    requirements: Vec<RequirementRecord>,
    models: Vec<ModelArtifact>,
    conflicts: Vec<ConflictRecord>,
    method_log: Vec<MethodLogEntry>,
    attestation: Attestation,
    global_validation_requested: bool,
    last_checklist: Option<ChecklistResult>,
}

type Result<T> = std::result::Result<T, WorkflowError>;

impl WorkflowSession {
    pub fn create(kb: &KnowledgeBase, id: impl Into<String>, needs: Vec<NeedRecord>) -> Result<Self> {
        if needs.is_empty() {
            return Err(WorkflowError::MissingNeeds);
        }
        let mut seen = HashSet::new();
        for n in &needs {
            if n.id.trim().is_empty() || n.statement.trim().is_empty() {
                return Err(WorkflowError::InvalidNeed(n.id.clone()));
            }
            if !seen.insert(n.id.as_str()) {
                return Err(WorkflowError::DuplicateNeedId(n.id.clone()));
            }
        }
        Ok(WorkflowSession {
            id: id.into(),
            kb_version: kb.version().to_owned(),
            version: 1,
            phase_state: PhaseState {
                phase: SessionPhase::LocalAnalysis,
                local_iteration: 1,
                business_cursor: None,
            },
            needs,
            increments: Vec::new(),
            requirements: Vec::new(),
            models: Vec::new(),
            conflicts: Vec::new(),
            method_log: Vec::new(),
            attestation: Attestation::default(),
            global_validation_requested: false,
            last_checklist: None,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn kb_version(&self) -> &str {
        &self.kb_version
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn phase_state(&self) -> &PhaseState {
        &self.phase_state
    }

    pub fn phase(&self) -> SessionPhase {
        self.phase_state.phase
    }

    pub fn needs(&self) -> &[NeedRecord] {
        &self.needs
    }

    pub fn increments(&self) -> &[IncrementSet] {
        &self.increments
    }

    pub fn requirements(&self) -> &[RequirementRecord] {
        &self.requirements
    }

    pub fn requirement(&self, id: &str) -> Option<&RequirementRecord> {
        self.requirements.iter().find(|r| r.id == id)
    }

    pub fn models(&self) -> &[ModelArtifact] {
        &self.models
    }

    pub fn conflicts(&self) -> &[ConflictRecord] {
        &self.conflicts
    }

    pub fn open_conflicts(&self) -> impl Iterator<Item = &ConflictRecord> {
        self.conflicts
            .iter()
            .filter(|c| c.status == ConflictStatus::Open)
    }

    pub fn method_log(&self) -> &[MethodLogEntry] {
        &self.method_log
    }

    /// The latest assignment for an activity.
    pub fn active_method(&self, activity: &str) -> Option<&str> {
        self.method_log
            .iter()
            .rev()
            .find(|e| e.activity == activity)
            .map(|e| e.method.as_str())
    }

    /// Latest assignment per activity, in order of first assignment.
    pub fn active_methods(&self) -> Vec<(&str, &str)> {
        let mut out: Vec<(&str, &str)> = Vec::new();
        for e in &self.method_log {
            match out.iter_mut().find(|(a, _)| *a == e.activity) {
                Some(slot) => slot.1 = &e.method,
                None => out.push((&e.activity, &e.method)),
            }
        }
        out
    }

    pub fn attestation(&self) -> &Attestation {
        &self.attestation
    }

    pub fn global_validation_requested(&self) -> bool {
        self.global_validation_requested
    }

    /// The checklist evaluated by the most recent Local Analysis `advance`.
    pub fn last_checklist(&self) -> Option<&ChecklistResult> {
        self.last_checklist.as_ref()
    }

    fn require_not_done(&self) -> Result<()> {
        if self.phase() == SessionPhase::Done {
            Err(WorkflowError::SessionDone)
        } else {
            Ok(())
        }
    }

    fn require_phase(&self, operation: &'static str, allowed: &[SessionPhase]) -> Result<()> {
        self.require_not_done()?;
        if allowed.contains(&self.phase()) {
            Ok(())
        } else {
            Err(WorkflowError::PhaseViolation {
                operation,
                phase: self.phase(),
            })
        }
    }

    fn index_of(&self, requirement: &str) -> Result<usize> {
        self.requirements
            .iter()
            .position(|r| r.id == requirement)
            .ok_or_else(|| WorkflowError::UnknownRequirement(requirement.to_owned()))
    }

    fn bump(&mut self) {
        self.version += 1;
    }

    pub fn record_requirement(
        &mut self,
        increment_label: &str,
        text: &str,
        kind: RequirementKind,
        parent: Option<&str>,
    ) -> Result<RequirementRecord> {
        self.require_phase("record_requirement", &[SessionPhase::LocalAnalysis])?;
        if increment_label.trim().is_empty() {
            return Err(WorkflowError::EmptyIncrementLabel);
        }
        if text.trim().is_empty() {
            return Err(WorkflowError::EmptyText);
        }
        let id = format!("r{}", self.requirements.len() + 1);
        if let Some(p) = parent {
            let parent_rec = &self.requirements[self.index_of(p)?];
            if parent_rec.kind != kind {
                return Err(WorkflowError::KindMismatch {
                    child: id,
                    parent: p.to_owned(),
                });
            }
        }

        let record = RequirementRecord {
            id: id.clone(),
            text: text.to_owned(),
            kind,
            parent: parent.map(str::to_owned),
            attributes: AttributeSet::default(),
            rationale: None,
            need_links: Vec::new(),
            models: Vec::new(),
            verification: QualityAttribute::ALL
                .into_iter()
                .map(|a| (a, VerificationMark::unverified()))
                .collect(),
        };
        let iteration = self.phase_state.local_iteration;
        match self
            .increments
            .iter_mut()
            .find(|i| i.label == increment_label && i.iteration == iteration)
        {
            Some(inc) => inc.requirement_ids.push(id),
            None => {
                let inc_id = format!("i{}", self.increments.len() + 1);
                self.increments.push(IncrementSet {
                    id: inc_id,
                    label: increment_label.to_owned(),
                    iteration,
                    requirement_ids: vec![id],
                });
            }
        }
        self.requirements.push(record.clone());
        self.bump();
        Ok(record)
    }

    pub fn attach_rationale(
        &mut self,
        requirement: &str,
        rationale: &str,
        need_ids: &[String],
    ) -> Result<RequirementRecord> {
        self.require_not_done()?;
        let idx = self.index_of(requirement)?;
        if let Some(bad) = need_ids
            .iter()
            .find(|n| !self.needs.iter().any(|need| &need.id == *n))
        {
            return Err(WorkflowError::UnknownNeed(bad.clone()));
        }
        let rec = &mut self.requirements[idx];
        if !rationale.trim().is_empty() {
            rec.rationale = Some(rationale.to_owned());
        }
        for n in need_ids {
            if !rec.need_links.contains(n) {
                rec.need_links.push(n.clone());
            }
        }
        let out = rec.clone();
        self.bump();
        Ok(out)
    }

    pub fn attach_model(&mut self, requirement_ids: &[String], artifact: ModelArtifact) -> Result<()> {
        self.require_not_done()?;
        if requirement_ids.is_empty() {
            return Err(WorkflowError::NoTargets);
        }
        let indices = requirement_ids
            .iter()
            .map(|r| self.index_of(r))
            .collect::<Result<Vec<_>>>()?;
        if self.models.iter().any(|m| m.id == artifact.id) {
            return Err(WorkflowError::DuplicateArtifact(artifact.id));
        }
        for i in indices {
            let models = &mut self.requirements[i].models;
            if !models.contains(&artifact.id) {
                models.push(artifact.id.clone());
            }
        }
        self.models.push(artifact);
        self.bump();
        Ok(())
    }

    /// Reclassification, re-parenting and attribute updates, applied
    /// together or not at all.
    pub fn organize(&mut self, requirement: &str, change: &OrganizeChange) -> Result<RequirementRecord> {
        self.require_not_done()?;
        let in_prioritization = self.phase() == SessionPhase::BusinessConcerns
            && self.phase_state.business_cursor.as_deref() == Some(PRIORITIZATION);
        if self.phase() != SessionPhase::LocalAnalysis && !in_prioritization {
            return Err(WorkflowError::PhaseViolation {
                operation: "organize",
                phase: self.phase(),
            });
        }
        let idx = self.index_of(requirement)?;
        if let Some(attrs) = &change.attributes {
            validate_attributes(attrs)?;
        }

        let current = &self.requirements[idx];
        let kind = change.kind.unwrap_or(current.kind);
        let parent = if change.clear_parent {
            None
        } else {
            change.parent.clone().or_else(|| current.parent.clone())
        };

        let parents: HashMap<&str, Option<&str>> = self
            .requirements
            .iter()
            .map(|r| {
                let p = if r.id == requirement {
                    parent.as_deref()
                } else {
                    r.parent.as_deref()
                };
                (r.id.as_str(), p)
            })
            .collect();
        if let Some(p) = &parent {
            let parent_rec = &self.requirements[self.index_of(p)?];
            if p == requirement {
                return Err(WorkflowError::HierarchyCycle(requirement.to_owned()));
            }
            let mut cursor = Some(p.as_str());
            let mut steps = 0;
            while let Some(c) = cursor {
                if c == requirement || steps > parents.len() {
                    return Err(WorkflowError::HierarchyCycle(requirement.to_owned()));
                }
                cursor = parents.get(c).copied().flatten();
                steps += 1;
            }
            if parent_rec.kind != kind {
                return Err(WorkflowError::KindMismatch {
                    child: requirement.to_owned(),
                    parent: p.clone(),
                });
            }
        }
        if let Some(child) = self
            .requirements
            .iter()
            .find(|r| r.parent.as_deref() == Some(requirement) && r.kind != kind)
        {
            return Err(WorkflowError::KindMismatch {
                child: child.id.clone(),
                parent: requirement.to_owned(),
            });
        }

        let rec = &mut self.requirements[idx];
        rec.kind = kind;
        rec.parent = parent;
        if let Some(attrs) = change.attributes {
            rec.attributes = attrs;
        }
        let out = rec.clone();
        self.bump();
        Ok(out)
    }

    /// Records a verification mark. During Local Analysis the global-only
    /// attributes cap at `partial`.
    pub fn mark_verification(
        &mut self,
        requirement: &str,
        attribute: QualityAttribute,
        status: VerificationStatus,
        note: &str,
    ) -> Result<RequirementRecord> {
        self.require_phase(
            "mark_verification",
            &[SessionPhase::LocalAnalysis, SessionPhase::GlobalEvaluation],
        )?;
        let idx = self.index_of(requirement)?;
        let scope = match self.phase() {
            SessionPhase::LocalAnalysis => {
                if attribute.is_global_only() && status == VerificationStatus::Verified {
                    return Err(WorkflowError::GlobalOnlyAttribute(attribute));
                }
                VerificationScope::Local
            }
            _ => VerificationScope::Global,
        };
        let rec = &mut self.requirements[idx];
        rec.verification.insert(
            attribute,
            VerificationMark {
                status,
                scope,
                note: note.to_owned(),
            },
        );
        let out = rec.clone();
        self.bump();
        Ok(out)
    }

    pub fn raise_conflict(
        &mut self,
        requirement_ids: &[String],
        description: &str,
        external_note: Option<&str>,
    ) -> Result<ConflictRecord> {
        self.require_not_done()?;
        let mut ids: Vec<String> = Vec::new();
        for r in requirement_ids {
            self.index_of(r)?;
            if !ids.contains(r) {
                ids.push(r.clone());
            }
        }
        let note = external_note.filter(|n| !n.trim().is_empty());
        if ids.len() < 2 && !(ids.len() == 1 && note.is_some()) {
            return Err(WorkflowError::InsufficientConflictTargets);
        }
        let record = ConflictRecord {
            id: format!("c{}", self.conflicts.len() + 1),
            requirement_ids: ids,
            description: description.to_owned(),
            external_note: note.map(str::to_owned),
            status: ConflictStatus::Open,
            resolution: None,
        };
        self.conflicts.push(record.clone());
        self.bump();
        Ok(record)
    }

    pub fn resolve_conflict(&mut self, conflict: &str, resolution: &str) -> Result<ConflictRecord> {
        self.require_not_done()?;
        let c = self
            .conflicts
            .iter_mut()
            .find(|c| c.id == conflict)
            .ok_or_else(|| WorkflowError::UnknownConflict(conflict.to_owned()))?;
        if c.status == ConflictStatus::Resolved {
            return Err(WorkflowError::AlreadyResolved(conflict.to_owned()));
        }
        if resolution.trim().is_empty() {
            return Err(WorkflowError::EmptyResolution);
        }
        c.status = ConflictStatus::Resolved;
        c.resolution = Some(resolution.to_owned());
        let out = c.clone();
        self.bump();
        Ok(out)
    }

    /// Stakeholder agreement that all requirements have been elicited.
    pub fn set_attestation(&mut self, agreed: bool, note: &str) -> Result<()> {
        self.require_phase("set_attestation", &[SessionPhase::LocalAnalysis])?;
        self.attestation = Attestation {
            agreed,
            note: note.to_owned(),
        };
        self.bump();
        Ok(())
    }

    /// Records whether the customer asked for validation during Global
    /// Evaluation. Nothing is gated on it.
    pub fn request_global_validation(&mut self, requested: bool) -> Result<()> {
        self.require_phase(
            "request_global_validation",
            &[SessionPhase::LocalAnalysis, SessionPhase::GlobalEvaluation],
        )?;
        self.global_validation_requested = requested;
        self.bump();
        Ok(())
    }

    pub fn evaluate_checklist(&self) -> Result<ChecklistResult> {
        self.require_phase("evaluate_checklist", &[SessionPhase::LocalAnalysis])?;
        Ok(self.compute_checklist())
    }

    fn compute_checklist(&self) -> ChecklistResult {
        let uninspected: Vec<&str> = self
            .requirements
            .iter()
            .filter(|r| {
                !QualityAttribute::ALL.iter().all(|&a| {
                    let status = r.mark(a).status;
                    if a.is_global_only() {
                        status == VerificationStatus::Partial
                    } else {
                        status >= VerificationStatus::Partial
                    }
                })
            })
            .map(|r| r.id.as_str())
            .collect();
        let quality_inspected = ChecklistItem {
            passed: uninspected.is_empty(),
            evidence: if uninspected.is_empty() {
                format!("{} requirement(s) inspected", self.requirements.len())
            } else {
                format!("not inspected: {}", uninspected.join(", "))
            },
        };

        let (unlinked, untraced) = self.trace_gaps();
        let traced_to_needs = ChecklistItem {
            passed: unlinked.is_empty() && untraced.is_empty(),
            evidence: match (unlinked.is_empty(), untraced.is_empty()) {
                (true, true) => "every requirement traces to a need and every need is covered".into(),
                _ => {
                    let mut parts = Vec::new();
                    if !unlinked.is_empty() {
                        parts.push(format!("requirements without needs: {}", unlinked.join(", ")));
                    }
                    if !untraced.is_empty() {
                        parts.push(format!("needs without requirements: {}", untraced.join(", ")));
                    }
                    parts.join("; ")
                }
            },
        };

        let stakeholder_agreement = ChecklistItem {
            passed: self.attestation.agreed,
            evidence: if self.attestation.agreed {
                if self.attestation.note.is_empty() {
                    "stakeholders attested".into()
                } else {
                    self.attestation.note.clone()
                }
            } else {
                "no stakeholder attestation recorded".into()
            },
        };

        let pass = quality_inspected.passed && traced_to_needs.passed && stakeholder_agreement.passed;
        ChecklistResult {
            quality_inspected,
            traced_to_needs,
            stakeholder_agreement,
            pass,
        }
    }

    /// Requirements without need links, and needs no requirement links to.
    pub fn trace_gaps(&self) -> (Vec<&str>, Vec<&str>) {
        let unlinked = self
            .requirements
            .iter()
            .filter(|r| r.need_links.is_empty())
            .map(|r| r.id.as_str())
            .collect();
        let linked: HashSet<&str> = self
            .requirements
            .iter()
            .flat_map(|r| r.need_links.iter().map(String::as_str))
            .collect();
        let untraced = self
            .needs
            .iter()
            .filter(|n| !linked.contains(n.id.as_str()))
            .map(|n| n.id.as_str())
            .collect();
        (unlinked, untraced)
    }

    /// Moves the session forward.
    ///
    /// In Local Analysis a failing checklist starts a new iteration rather
    /// than erroring. Global Evaluation requires every global-only
    /// attribute verified and no open conflict. Business Concerns walks its
    /// activities in rank order and then finishes.
    pub fn advance(&mut self, kb: &KnowledgeBase) -> Result<PhaseState> {
        self.require_not_done()?;
        match self.phase() {
            SessionPhase::LocalAnalysis => {
                let checklist = self.compute_checklist();
                if checklist.pass {
                    self.phase_state.phase = SessionPhase::GlobalEvaluation;
                } else {
                    self.phase_state.local_iteration += 1;
                }
                self.last_checklist = Some(checklist);
            }
            SessionPhase::GlobalEvaluation => {
                let unverified: Vec<String> = self
                    .requirements
                    .iter()
                    .filter(|r| {
                        QualityAttribute::GLOBAL_ONLY
                            .iter()
                            .any(|&a| r.mark(a).status != VerificationStatus::Verified)
                    })
                    .map(|r| r.id.clone())
                    .collect();
                if !unverified.is_empty() {
                    return Err(WorkflowError::BlockedByGlobalVerification(unverified));
                }
                self.require_no_open_conflicts()?;
                match kb.activities_in_phase(Phase::BusinessConcerns).first() {
                    Some(first) => {
                        self.phase_state.phase = SessionPhase::BusinessConcerns;
                        self.phase_state.business_cursor = Some(first.id.clone());
                    }
                    None => self.finish()?,
                }
            }
            SessionPhase::BusinessConcerns => {
                let sequence = kb.activities_in_phase(Phase::BusinessConcerns);
                let cursor = self.phase_state.business_cursor.as_deref();
                let pos = sequence.iter().position(|a| Some(a.id.as_str()) == cursor);
                match pos.and_then(|p| sequence.get(p + 1)) {
                    Some(next) => self.phase_state.business_cursor = Some(next.id.clone()),
                    None => self.finish()?,
                }
            }
            SessionPhase::Done => unreachable!("checked above"),
        }
        self.bump();
        Ok(self.phase_state.clone())
    }

    fn require_no_open_conflicts(&self) -> Result<()> {
        let open: Vec<String> = self.open_conflicts().map(|c| c.id.clone()).collect();
        if open.is_empty() {
            Ok(())
        } else {
            Err(WorkflowError::BlockedByOpenConflicts(open))
        }
    }

    fn finish(&mut self) -> Result<()> {
        self.require_no_open_conflicts()?;
        let (unlinked, untraced) = self.trace_gaps();
        if !unlinked.is_empty() || !untraced.is_empty() {
            let ids = unlinked.into_iter().chain(untraced).map(str::to_owned).collect();
            return Err(WorkflowError::BlockedByTraceability(ids));
        }
        self.phase_state.phase = SessionPhase::Done;
        self.phase_state.business_cursor = None;
        Ok(())
    }

    /// Logs the method used for an activity. Re-assignment appends; the
    /// latest entry is the active one.
    pub fn assign_method(
        &mut self,
        kb: &KnowledgeBase,
        activity: &str,
        method: &str,
        at: DateTime<Utc>,
    ) -> Result<MethodLogEntry> {
        self.require_not_done()?;
        let act = kb
            .activity(activity)
            .ok_or_else(|| WorkflowError::UnknownActivity(activity.to_owned()))?;
        if kb.method(method).is_none() {
            return Err(WorkflowError::UnknownMethod(method.to_owned()));
        }
        if !kb.is_applicable(activity, method) {
            return Err(WorkflowError::NotApplicable {
                activity: activity.to_owned(),
                method: method.to_owned(),
            });
        }
        if SessionPhase::from(act.phase.phase) > self.phase() {
            return Err(WorkflowError::ActivityNotReached(activity.to_owned()));
        }
        let entry = MethodLogEntry {
            activity: activity.to_owned(),
            method: method.to_owned(),
            at,
        };
        self.method_log.push(entry.clone());
        self.bump();
        Ok(entry)
    }

    /// Verification marks of every requirement, for reporting.
    pub fn verification_matrix(&self) -> BTreeMap<&str, Vec<(QualityAttribute, VerificationStatus)>> {
        self.requirements
            .iter()
            .map(|r| {
                (
                    r.id.as_str(),
                    r.verification.iter().map(|(a, m)| (*a, m.status)).collect(),
                )
            })
            .collect()
    }
}

fn validate_attributes(attrs: &AttributeSet) -> Result<()> {
    if let Some(risk) = &attrs.risk {
        if risk.category.is_none() {
            return Err(WorkflowError::MissingRiskCategory);
        }
    }
    if let Some(i) = attrs.customer_importance {
        if !(1..=10).contains(&i) {
            return Err(WorkflowError::InvalidImportance(i));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::seed_kb;

    fn at() -> DateTime<Utc> {
        DateTime::parse_from_rfc3339("2026-01-05T10:00:00Z").unwrap().with_timezone(&Utc)
    }

    fn session() -> WorkflowSession {
        WorkflowSession::create(
            &seed_kb(),
            "s1",
            vec![NeedRecord::new("n1", "Track orders"), NeedRecord::new("n2", "Bill customers")],
        )
        .unwrap()
    }

    fn mark_local(s: &mut WorkflowSession, r: &str) {
        for a in QualityAttribute::ALL {
            let status = if a.is_global_only() {
                VerificationStatus::Partial
            } else {
                VerificationStatus::Verified
            };
            s.mark_verification(r, a, status, "").unwrap();
        }
    }

    /// Two requirements, fully linked, inspected and attested.
    fn passing() -> WorkflowSession {
        let mut s = session();
        s.record_requirement("orders", "List open orders", RequirementKind::Functional, None)
            .unwrap();
        s.record_requirement("billing", "Issue invoices", RequirementKind::Functional, None)
            .unwrap();
        s.attach_rationale("r1", "ops asked", &["n1".into()]).unwrap();
        s.attach_rationale("r2", "finance asked", &["n2".into()]).unwrap();
        mark_local(&mut s, "r1");
        mark_local(&mut s, "r2");
        s.set_attestation(true, "signed off").unwrap();
        s
    }

    fn verify_globally(s: &mut WorkflowSession) {
        for r in ["r1", "r2"] {
            for a in QualityAttribute::GLOBAL_ONLY {
                s.mark_verification(r, a, VerificationStatus::Verified, "").unwrap();
            }
        }
    }

    #[test]
    fn create_starts_local_iteration_one() {
        let s = session();
        assert_eq!(s.phase(), SessionPhase::LocalAnalysis);
        assert_eq!(s.phase_state().local_iteration, 1);
        assert!(s.requirements().is_empty());
        let cl = s.evaluate_checklist().unwrap();
        assert!(!cl.traced_to_needs.passed && !cl.stakeholder_agreement.passed);
    }

    #[test]
    fn create_errors() {
        let kb = seed_kb();
        assert_eq!(
            WorkflowSession::create(&kb, "s", vec![]),
            Err(WorkflowError::MissingNeeds)
        );
        assert_eq!(
            WorkflowSession::create(&kb, "s", vec![NeedRecord::new("n1", "a"), NeedRecord::new("n1", "b")]),
            Err(WorkflowError::DuplicateNeedId("n1".into()))
        );
    }

    #[test]
    fn new_requirement_is_unverified_and_grouped_by_increment() {
        let mut s = session();
        let r = s
            .record_requirement("orders", "List open orders", RequirementKind::Functional, None)
            .unwrap();
        assert_eq!(r.verification.len(), 6);
        assert!(r
            .verification
            .values()
            .all(|m| m.status == VerificationStatus::Unverified));
        s.record_requirement("orders", "Filter orders", RequirementKind::Functional, Some("r1"))
            .unwrap();
        assert_eq!(s.increments().len(), 1);
        assert_eq!(s.increments()[0].requirement_ids, ["r1", "r2"]);
    }

    #[test]
    fn kind_mismatch_under_parent() {
        let mut s = session();
        s.record_requirement("perf", "Respond in 1s", RequirementKind::NonFunctional, None)
            .unwrap();
        assert!(matches!(
            s.record_requirement("perf", "Show a page", RequirementKind::Functional, Some("r1")),
            Err(WorkflowError::KindMismatch { .. })
        ));
    }

    #[test]
    fn recording_outside_local_analysis_fails() {
        let kb = seed_kb();
        let mut s = passing();
        s.advance(&kb).unwrap();
        verify_globally(&mut s);
        s.advance(&kb).unwrap();
        assert_eq!(s.phase(), SessionPhase::BusinessConcerns);
        assert!(matches!(
            s.record_requirement("x", "late", RequirementKind::Functional, None),
            Err(WorkflowError::PhaseViolation { .. })
        ));
    }

    #[test]
    fn rationale_links_are_a_set() {
        let mut s = session();
        s.record_requirement("o", "x", RequirementKind::Functional, None).unwrap();
        s.attach_rationale("r1", "why", &["n1".into()]).unwrap();
        let r = s.attach_rationale("r1", "why", &["n1".into()]).unwrap();
        assert_eq!(r.need_links, ["n1"]);
        assert_eq!(
            s.attach_rationale("r1", "why", &["n99".into()]),
            Err(WorkflowError::UnknownNeed("n99".into()))
        );
    }

    #[test]
    fn models_link_to_each_target() {
        let mut s = session();
        s.record_requirement("o", "x", RequirementKind::Functional, None).unwrap();
        s.record_requirement("o", "y", RequirementKind::Functional, None).unwrap();
        let art = ModelArtifact {
            id: "m1".into(),
            kind: "use case diagram".into(),
            uri_or_blob: "file://uc.png".into(),
        };
        s.attach_model(&["r1".into(), "r2".into()], art.clone()).unwrap();
        assert_eq!(s.requirement("r1").unwrap().models, ["m1"]);
        assert_eq!(s.requirement("r2").unwrap().models, ["m1"]);
        assert_eq!(s.attach_model(&[], art.clone()), Err(WorkflowError::NoTargets));
        assert_eq!(
            s.attach_model(&["r1".into()], art),
            Err(WorkflowError::DuplicateArtifact("m1".into()))
        );
    }

    #[test]
    fn organize_rules() {
        let mut s = session();
        s.record_requirement("o", "a", RequirementKind::Functional, None).unwrap();
        s.record_requirement("o", "b", RequirementKind::Functional, Some("r1")).unwrap();
        let attrs = AttributeSet {
            risk: Some(RiskAnnotation {
                level: RiskLevel::High,
                category: Some(RiskCategory::ProductEngineering),
            }),
            customer_importance: Some(9),
            effort: None,
        };
        let r = s
            .organize("r1", &OrganizeChange { attributes: Some(attrs), ..Default::default() })
            .unwrap();
        assert_eq!(r.attributes, attrs);

        let cycle = OrganizeChange {
            parent: Some("r2".into()),
            ..Default::default()
        };
        assert_eq!(s.organize("r1", &cycle), Err(WorkflowError::HierarchyCycle("r1".into())));

        let no_category = OrganizeChange {
            attributes: Some(AttributeSet {
                risk: Some(RiskAnnotation {
                    level: RiskLevel::Low,
                    category: None,
                }),
                ..Default::default()
            }),
            ..Default::default()
        };
        assert_eq!(s.organize("r1", &no_category), Err(WorkflowError::MissingRiskCategory));

        // a parent cannot change kind away from its children
        let reclassify = OrganizeChange {
            kind: Some(RequirementKind::NonFunctional),
            ..Default::default()
        };
        assert!(matches!(
            s.organize("r1", &reclassify),
            Err(WorkflowError::KindMismatch { .. })
        ));
        assert_eq!(s.requirement("r1").unwrap().kind, RequirementKind::Functional);
    }

    #[test]
    fn verification_cap_in_local_phase() {
        let kb = seed_kb();
        let mut s = passing();
        assert_eq!(
            s.mark_verification("r1", QualityAttribute::Completeness, VerificationStatus::Verified, ""),
            Err(WorkflowError::GlobalOnlyAttribute(QualityAttribute::Completeness))
        );
        let r = s
            .mark_verification("r1", QualityAttribute::Correctness, VerificationStatus::Verified, "ok")
            .unwrap();
        assert_eq!(r.mark(QualityAttribute::Correctness).scope, VerificationScope::Local);

        s.advance(&kb).unwrap();
        let r = s
            .mark_verification("r1", QualityAttribute::Traceability, VerificationStatus::Verified, "")
            .unwrap();
        assert_eq!(r.mark(QualityAttribute::Traceability).scope, VerificationScope::Global);
        assert_eq!(
            "clarity".parse::<QualityAttribute>(),
            Err(WorkflowError::UnknownAttribute("clarity".into()))
        );
    }

    #[test]
    fn conflicts() {
        let mut s = passing();
        let c = s.raise_conflict(&["r1".into(), "r2".into()], "thresholds differ", None).unwrap();
        assert_eq!(c.status, ConflictStatus::Open);
        assert_eq!(
            s.raise_conflict(&["r1".into()], "alone", None),
            Err(WorkflowError::InsufficientConflictTargets)
        );
        s.raise_conflict(&["r1".into()], "regulation", Some("GDPR art. 17")).unwrap();
        assert_eq!(s.resolve_conflict("c1", "  "), Err(WorkflowError::EmptyResolution));
        let c = s
            .resolve_conflict("c1", "merged thresholds per stakeholder agreement")
            .unwrap();
        assert_eq!(c.status, ConflictStatus::Resolved);
        assert_eq!(
            s.resolve_conflict("c1", "again"),
            Err(WorkflowError::AlreadyResolved("c1".into()))
        );
    }

    #[test]
    fn checklist_pass_and_failures() {
        let s = passing();
        assert!(s.evaluate_checklist().unwrap().pass);

        let mut s = passing();
        s.record_requirement("orders", "Cancel orders", RequirementKind::Functional, None)
            .unwrap();
        mark_local(&mut s, "r3");
        let cl = s.evaluate_checklist().unwrap();
        assert!(!cl.traced_to_needs.passed);
        assert!(cl.traced_to_needs.evidence.contains("r3"));
        assert!(!cl.pass);

        let mut s = session();
        s.record_requirement("orders", "x", RequirementKind::Functional, None).unwrap();
        s.attach_rationale("r1", "", &["n1".into()]).unwrap();
        mark_local(&mut s, "r1");
        s.set_attestation(true, "").unwrap();
        let cl = s.evaluate_checklist().unwrap();
        assert!(cl.quality_inspected.passed);
        assert!(!cl.traced_to_needs.passed);
        assert!(cl.traced_to_needs.evidence.contains("n2"));
    }

    #[test]
    fn failing_checklist_starts_new_iteration() {
        let kb = seed_kb();
        let mut s = session();
        let state = s.advance(&kb).unwrap();
        assert_eq!(state.phase, SessionPhase::LocalAnalysis);
        assert_eq!(state.local_iteration, 2);
        assert!(!s.last_checklist().unwrap().pass);
    }

    #[test]
    fn global_gates() {
        let kb = seed_kb();
        let mut s = passing();
        s.advance(&kb).unwrap();
        assert_eq!(s.phase(), SessionPhase::GlobalEvaluation);
        assert!(matches!(
            s.advance(&kb),
            Err(WorkflowError::BlockedByGlobalVerification(ids)) if ids == ["r1", "r2"]
        ));
        verify_globally(&mut s);
        s.raise_conflict(&["r1".into(), "r2".into()], "overlap", None).unwrap();
        assert_eq!(
            s.advance(&kb),
            Err(WorkflowError::BlockedByOpenConflicts(vec!["c1".into()]))
        );
        s.resolve_conflict("c1", "split scope").unwrap();
        let state = s.advance(&kb).unwrap();
        assert_eq!(state.phase, SessionPhase::BusinessConcerns);
        assert_eq!(state.business_cursor.as_deref(), Some("market_analysis"));
    }

    #[test]
    fn business_concerns_walk_to_done() {
        let kb = seed_kb();
        let mut s = passing();
        s.advance(&kb).unwrap();
        verify_globally(&mut s);
        let mut visited = Vec::new();
        loop {
            let state = s.advance(&kb).unwrap();
            match state.business_cursor {
                Some(c) => visited.push(c),
                None => break,
            }
        }
        assert_eq!(
            visited,
            [
                "market_analysis",
                "prioritization",
                "schedule_estimation",
                "risk_analysis",
                "cost_estimation",
                "price_analysis",
                "tradeoff_analysis"
            ]
        );
        assert_eq!(s.phase(), SessionPhase::Done);
        assert_eq!(s.advance(&kb), Err(WorkflowError::SessionDone));
    }

    #[test]
    fn conflict_raised_in_business_blocks_done() {
        let kb = seed_kb();
        let mut s = passing();
        s.advance(&kb).unwrap();
        verify_globally(&mut s);
        for _ in 0..7 {
            s.advance(&kb).unwrap();
        }
        assert_eq!(s.phase_state().business_cursor.as_deref(), Some("tradeoff_analysis"));
        s.raise_conflict(&["r1".into(), "r2".into()], "scope", None).unwrap();
        assert!(matches!(s.advance(&kb), Err(WorkflowError::BlockedByOpenConflicts(_))));
    }

    #[test]
    fn method_assignment() {
        let kb = seed_kb();
        let mut s = passing();
        assert_eq!(
            s.assign_method(&kb, "risk_analysis", "monte_carlo_simulation", at()),
            Err(WorkflowError::ActivityNotReached("risk_analysis".into()))
        );
        s.assign_method(&kb, "elicitation", "interviews", at()).unwrap();
        s.advance(&kb).unwrap();
        verify_globally(&mut s);
        s.advance(&kb).unwrap();
        s.assign_method(&kb, "risk_analysis", "monte_carlo_simulation", at()).unwrap();
        assert!(matches!(
            s.assign_method(&kb, "risk_analysis", "interviews", at()),
            Err(WorkflowError::NotApplicable { .. })
        ));
        s.assign_method(&kb, "risk_analysis", "criticality_analysis", at()).unwrap();
        let risk_entries = s
            .method_log()
            .iter()
            .filter(|e| e.activity == "risk_analysis")
            .count();
        assert_eq!(risk_entries, 2);
        assert_eq!(s.active_method("risk_analysis"), Some("criticality_analysis"));
    }

    #[test]
    fn organize_allowed_during_prioritization_only() {
        let kb = seed_kb();
        let mut s = passing();
        s.advance(&kb).unwrap();
        verify_globally(&mut s);
        s.advance(&kb).unwrap(); // market_analysis
        let change = OrganizeChange {
            attributes: Some(AttributeSet {
                customer_importance: Some(3),
                ..Default::default()
            }),
            ..Default::default()
        };
        assert!(matches!(
            s.organize("r1", &change),
            Err(WorkflowError::PhaseViolation { .. })
        ));
        s.advance(&kb).unwrap(); // prioritization
        assert!(s.organize("r1", &change).is_ok());
    }

    #[test]
    fn failed_operation_leaves_session_unchanged() {
        let mut s = passing();
        let before = s.clone();
        let _ = s.mark_verification("r1", QualityAttribute::Consistency, VerificationStatus::Verified, "");
        let _ = s.attach_rationale("r1", "new", &["n1".into(), "nx".into()]);
        assert_eq!(s, before);
    }
}
