//! File-backed sessions. Each session lives in `sessions/<id>/` as an
//! append-only operation log (`log.json`) plus a materialized snapshot
//! (`state.json`). Loading replays the log and rejects a snapshot that
//! disagrees with it.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use reqpath_core::workflow::{Journal, LogEntry, WorkflowError, WorkflowSession};
use reqpath_core::KnowledgeBase;
use thiserror::Error;

const LOG_FILE: &str = "log.json";
const STATE_FILE: &str = "state.json";

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("session `{0}` not found")]
    NotFound(String),
    #[error("session `{id}` is corrupt: {reason}")]
    Corrupt { id: String, reason: String },
    #[error("`{0}` is not a valid session id")]
    InvalidId(String),
    #[error("session storage I/O failed at {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl PersistError {
    pub fn code(&self) -> &'static str {
        match self {
            PersistError::NotFound(_) => "not_found",
            PersistError::Corrupt { .. } => "corrupt_session",
            PersistError::InvalidId(_) => "invalid_session_id",
            PersistError::Io { .. } => "storage_error",
        }
    }
}

/// Session ids become directory names, so keep them to a safe alphabet.
pub fn valid_session_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 128
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

pub fn session_dir(data_dir: &Path, id: &str) -> PathBuf {
    data_dir.join("sessions").join(id)
}

pub fn session_exists(data_dir: &Path, id: &str) -> bool {
    valid_session_id(id) && session_dir(data_dir, id).join(LOG_FILE).is_file()
}

pub fn save_session(journal: &Journal, data_dir: &Path) -> Result<(), PersistError> {
    let id = journal.session().id();
    if !valid_session_id(id) {
        return Err(PersistError::InvalidId(id.to_owned()));
    }
    let dir = session_dir(data_dir, id);
    fs::create_dir_all(&dir).map_err(|source| PersistError::Io {
        path: dir.clone(),
        source,
    })?;
    let log = serde_json::to_vec_pretty(journal.log()).expect("log entries serialize");
    let state = serde_json::to_vec_pretty(journal.session()).expect("sessions serialize");
    // Log first: a crash between the two writes leaves a log that is ahead
    // of the snapshot, which load reports rather than silently accepts.
    write_atomic(&dir.join(LOG_FILE), &log)?;
    write_atomic(&dir.join(STATE_FILE), &state)
}

pub fn load_session(kb: &KnowledgeBase, id: &str, data_dir: &Path) -> Result<Journal, PersistError> {
    if !valid_session_id(id) {
        return Err(PersistError::NotFound(id.to_owned()));
    }
    let dir = session_dir(data_dir, id);
    let corrupt = |reason: String| PersistError::Corrupt {
        id: id.to_owned(),
        reason,
    };
    let log_bytes = read(&dir.join(LOG_FILE), id)?;
    let state_bytes = read(&dir.join(STATE_FILE), id)?;
    let log: Vec<LogEntry> =
        serde_json::from_slice(&log_bytes).map_err(|e| corrupt(format!("{LOG_FILE}: {e}")))?;
    let snapshot: WorkflowSession =
        serde_json::from_slice(&state_bytes).map_err(|e| corrupt(format!("{STATE_FILE}: {e}")))?;
    if snapshot.id() != id {
        return Err(corrupt(format!("snapshot belongs to session `{}`", snapshot.id())));
    }
    Journal::restore(kb, snapshot, log).map_err(|e| match e {
        WorkflowError::CorruptSession(reason) => corrupt(reason),
        other => corrupt(other.to_string()),
    })
}

/// Ids of every stored session, sorted.
pub fn list_sessions(data_dir: &Path) -> Result<Vec<String>, PersistError> {
    let root = data_dir.join("sessions");
    let entries = match fs::read_dir(&root) {
        Ok(entries) => entries,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(source) => return Err(PersistError::Io { path: root, source }),
    };
    let mut ids: Vec<String> = entries
        .filter_map(|e| e.ok())
        .filter_map(|e| e.file_name().into_string().ok())
        .filter(|id| session_exists(data_dir, id))
        .collect();
    ids.sort();
    Ok(ids)
}

fn read(path: &Path, id: &str) -> Result<Vec<u8>, PersistError> {
    fs::read(path).map_err(|source| {
        if source.kind() == io::ErrorKind::NotFound {
            PersistError::NotFound(id.to_owned())
        } else {
            PersistError::Io {
                path: path.to_owned(),
                source,
            }
        }
    })
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), PersistError> {
    let io_err = |source| PersistError::Io {
        path: path.to_owned(),
        source,
    };
    let tmp = path.with_extension("json.tmp");
    let mut file = fs::File::create(&tmp).map_err(io_err)?;
    file.write_all(bytes).map_err(io_err)?;
    file.sync_all().map_err(io_err)?;
    fs::rename(&tmp, path).map_err(io_err)
}
