//! Append-only operation log for a session. Replaying the log from the
//! `create` entry reproduces the session exactly.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::types::*;
use super::{WorkflowError, WorkflowSession};
use crate::kb::KnowledgeBase;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Command {
    Create {
        id: String,
        needs: Vec<NeedRecord>,
    },
    RecordRequirement {
        increment: String,
        text: String,
        kind: RequirementKind,
        #[serde(default)]
        parent: Option<String>,
    },
    AttachRationale {
        requirement: String,
        rationale: String,
        need_ids: Vec<String>,
    },
    AttachModel {
        requirement_ids: Vec<String>,
        artifact: ModelArtifact,
    },
    Organize {
        requirement: String,
        #[serde(flatten)]
        change: OrganizeChange,
    },
    MarkVerification {
        requirement: String,
        attribute: QualityAttribute,
        status: VerificationStatus,
        #[serde(default)]
        note: String,
    },
    RaiseConflict {
        requirement_ids: Vec<String>,
        description: String,
        #[serde(default)]
        external_note: Option<String>,
    },
    ResolveConflict {
        conflict: String,
        resolution: String,
    },
    SetAttestation {
        agreed: bool,
        #[serde(default)]
        note: String,
    },
    RequestGlobalValidation {
        requested: bool,
    },
    AssignMethod {
        activity: String,
        method: String,
        at: DateTime<Utc>,
    },
    Advance,
}

/// What a successful command touched.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Applied {
    Session,
    Requirement(RequirementRecord),
    Conflict(ConflictRecord),
    Phase(PhaseState),
    Method(MethodLogEntry),
}

/// Applies one non-create command to a session.
pub fn apply(session: &mut WorkflowSession, kb: &KnowledgeBase, command: &Command) -> Result<Applied, WorkflowError> {
    Ok(match command {
        Command::Create { .. } => {
            return Err(WorkflowError::CorruptSession(
                "create may only appear as the first log entry".into(),
            ))
        }
        Command::RecordRequirement {
            increment,
            text,
            kind,
            parent,
        } => Applied::Requirement(session.record_requirement(increment, text, *kind, parent.as_deref())?),
        Command::AttachRationale {
            requirement,
            rationale,
            need_ids,
        } => Applied::Requirement(session.attach_rationale(requirement, rationale, need_ids)?),
        Command::AttachModel {
            requirement_ids,
            artifact,
        } => {
            session.attach_model(requirement_ids, artifact.clone())?;
            Applied::Session
        }
        Command::Organize { requirement, change } => {
            Applied::Requirement(session.organize(requirement, change)?)
        }
        Command::MarkVerification {
            requirement,
            attribute,
            status,
            note,
        } => Applied::Requirement(session.mark_verification(requirement, *attribute, *status, note)?),
        Command::RaiseConflict {
            requirement_ids,
            description,
            external_note,
        } => Applied::Conflict(session.raise_conflict(requirement_ids, description, external_note.as_deref())?),
        Command::ResolveConflict {
            conflict,
            resolution,
        } => Applied::Conflict(session.resolve_conflict(conflict, resolution)?),
        Command::SetAttestation { agreed, note } => {
            session.set_attestation(*agreed, note)?;
            Applied::Session
        }
        Command::RequestGlobalValidation { requested } => {
            session.request_global_validation(*requested)?;
            Applied::Session
        }
        Command::AssignMethod { activity, method, at } => {
            Applied::Method(session.assign_method(kb, activity, method, *at)?)
        }
        Command::Advance => Applied::Phase(session.advance(kb)?),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEntry {
    pub seq: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub request_id: Option<String>,
    pub command: Command,
}

/// A session together with the log that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Journal {
    session: WorkflowSession,
    log: Vec<LogEntry>,
}

impl Journal {
    pub fn create(
        kb: &KnowledgeBase,
        id: impl Into<String>,
        needs: Vec<NeedRecord>,
        request_id: Option<String>,
    ) -> Result<Self, WorkflowError> {
        let id = id.into();
        let session = WorkflowSession::create(kb, id.clone(), needs.clone())?;
        Ok(Journal {
            session,
            log: vec![LogEntry {
                seq: 1,
                request_id,
                command: Command::Create { id, needs },
            }],
        })
    }

    pub fn session(&self) -> &WorkflowSession {
        &self.session
    }

    pub fn log(&self) -> &[LogEntry] {
        &self.log
    }

    /// Applies a command; only successful commands are logged.
    pub fn execute(
        &mut self,
        kb: &KnowledgeBase,
        command: Command,
        request_id: Option<String>,
    ) -> Result<Applied, WorkflowError> {
        let applied = apply(&mut self.session, kb, &command)?;
        self.log.push(LogEntry {
            seq: self.log.len() as u64 + 1,
            request_id,
            command,
        });
        Ok(applied)
    }

    pub fn find_request(&self, request_id: &str) -> Option<&LogEntry> {
        self.log
            .iter()
            .find(|e| e.request_id.as_deref() == Some(request_id))
    }

    /// Rebuilds a session from its log.
    pub fn replay(kb: &KnowledgeBase, log: Vec<LogEntry>) -> Result<Self, WorkflowError> {
        let corrupt = |msg: String| WorkflowError::CorruptSession(msg);
        let Some(first) = log.first() else {
            return Err(corrupt("log is empty".into()));
        };
        let Command::Create { id, needs } = &first.command else {
            return Err(corrupt("log does not start with create".into()));
        };
        let mut session = WorkflowSession::create(kb, id.clone(), needs.clone())
            .map_err(|e| corrupt(format!("entry 1: {e}")))?;
        for (i, entry) in log.iter().enumerate() {
            if entry.seq != i as u64 + 1 {
                return Err(corrupt(format!("entry {} has sequence number {}", i + 1, entry.seq)));
            }
            if i == 0 {
                continue;
            }
            apply(&mut session, kb, &entry.command).map_err(|e| corrupt(format!("entry {}: {e}", entry.seq)))?;
        }
        Ok(Journal { session, log })
    }

    /// Rebuilds from the log and checks the result against a stored
    /// snapshot.
    pub fn restore(kb: &KnowledgeBase, snapshot: WorkflowSession, log: Vec<LogEntry>) -> Result<Self, WorkflowError> {
        let journal = Self::replay(kb, log)?;
        if journal.session != snapshot {
            return Err(WorkflowError::CorruptSession(format!(
                "snapshot at version {} does not match log replay at version {}",
                snapshot.version(),
                journal.session.version()
            )));
        }
        Ok(journal)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::seed_kb;

    fn journal() -> Journal {
        let kb = seed_kb();
        let mut j = Journal::create(&kb, "s1", vec![NeedRecord::new("n1", "need")], Some("req-0".into())).unwrap();
        j.execute(
            &kb,
            Command::RecordRequirement {
                increment: "core".into(),
                text: "do a thing".into(),
                kind: RequirementKind::Functional,
                parent: None,
            },
            Some("req-1".into()),
        )
        .unwrap();
        j.execute(
            &kb,
            Command::AttachRationale {
                requirement: "r1".into(),
                rationale: "because".into(),
                need_ids: vec!["n1".into()],
            },
            None,
        )
        .unwrap();
        j.execute(&kb, Command::Advance, None).unwrap();
        j
    }

    #[test]
    fn replay_reproduces_session() {
        let kb = seed_kb();
        let j = journal();
        assert_eq!(j.session().version(), j.log().len() as u64);
        let replayed = Journal::replay(&kb, j.log().to_vec()).unwrap();
        assert_eq!(replayed, j);
        assert!(Journal::restore(&kb, j.session().clone(), j.log().to_vec()).is_ok());
    }

    #[test]
    fn failed_commands_are_not_logged() {
        let kb = seed_kb();
        let mut j = journal();
        let len = j.log().len();
        assert!(j
            .execute(&kb, Command::ResolveConflict { conflict: "c9".into(), resolution: "x".into() }, None)
            .is_err());
        assert_eq!(j.log().len(), len);
    }

    #[test]
    fn truncated_log_does_not_match_snapshot() {
        let kb = seed_kb();
        let j = journal();
        let mut log = j.log().to_vec();
        log.pop();
        assert!(matches!(
            Journal::restore(&kb, j.session().clone(), log),
            Err(WorkflowError::CorruptSession(_))
        ));
    }

    #[test]
    fn log_must_start_with_create() {
        let kb = seed_kb();
        let log = vec![LogEntry {
            seq: 1,
            request_id: None,
            command: Command::Advance,
        }];
        assert!(matches!(Journal::replay(&kb, log), Err(WorkflowError::CorruptSession(_))));
    }

    #[test]
    fn commands_serialize_with_op_tag() {
        let json = serde_json::to_value(&Command::Advance).unwrap();
        assert_eq!(json, serde_json::json!({"op": "advance"}));
        assert_eq!(journal().find_request("req-1").unwrap().seq, 2);
    }
}
