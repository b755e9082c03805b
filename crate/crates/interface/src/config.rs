use std::path::{Path, PathBuf};

use reqpath_core::kb::{load_kb, seed_kb, KbError, KnowledgeBase};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const KB_ENV: &str = "REQPATH_KB";
pub const DATA_DIR_ENV: &str = "REQPATH_DATA_DIR";
pub const DEFAULT_LISTEN: &str = "127.0.0.1:8080";
pub const DEFAULT_DATA_DIR: &str = "reqpath-data";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceConfig {
    pub listen: String,
    /// `None` selects the built-in seed catalog.
    pub kb_path: Option<PathBuf>,
    pub data_dir: PathBuf,
    pub read_only: bool,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            listen: DEFAULT_LISTEN.to_owned(),
            kb_path: None,
            data_dir: PathBuf::from(DEFAULT_DATA_DIR),
            read_only: false,
        }
    }
}

impl ServiceConfig {
    pub fn load_kb(&self) -> Result<KnowledgeBase, ConfigError> {
        load_kb_from(self.kb_path.as_deref())
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read knowledge base {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("knowledge base {path}: {source}")]
    Kb { path: PathBuf, source: KbError },
}

impl ConfigError {
    pub fn code(&self) -> &'static str {
        match self {
            ConfigError::Read { .. } => "kb_unreadable",
            ConfigError::Kb { source, .. } => source.code(),
        }
    }
}

pub fn load_kb_from(path: Option<&Path>) -> Result<KnowledgeBase, ConfigError> {
    let Some(path) = path else {
        return Ok(seed_kb());
    };
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_owned(),
        source,
    })?;
    load_kb(&text).map_err(|source| ConfigError::Kb {
        path: path.to_owned(),
        source,
    })
}
