use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::kb::Phase;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionPhase {
    LocalAnalysis,
    GlobalEvaluation,
    BusinessConcerns,
    Done,
}

impl SessionPhase {
    pub fn as_str(self) -> &'static str {
        match self {
            SessionPhase::LocalAnalysis => "local_analysis",
            SessionPhase::GlobalEvaluation => "global_evaluation",
            SessionPhase::BusinessConcerns => "business_concerns",
            SessionPhase::Done => "done",
        }
    }
}

impl From<Phase> for SessionPhase {
    fn from(p: Phase) -> Self {
        match p {
            Phase::LocalAnalysis => SessionPhase::LocalAnalysis,
            Phase::GlobalEvaluation => SessionPhase::GlobalEvaluation,
            Phase::BusinessConcerns => SessionPhase::BusinessConcerns,
        }
    }
}

impl fmt::Display for SessionPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseState {
    pub phase: SessionPhase,
    /// Number of Local Analysis rounds started so far.
    pub local_iteration: u32,
    /// Current Business Concerns activity; set only in that phase.
    pub business_cursor: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeedRecord {
    pub id: String,
    pub statement: String,
    #[serde(default)]
    pub source: String,
}

impl NeedRecord {
    pub fn new(id: impl Into<String>, statement: impl Into<String>) -> Self {
        NeedRecord {
            id: id.into(),
            statement: statement.into(),
            source: String::new(),
        }
    }
}

/// Requirements of one functional partition captured in one iteration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncrementSet {
    pub id: String,
    pub label: String,
    pub iteration: u32,
    pub requirement_ids: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequirementKind {
    Functional,
    NonFunctional,
}

impl FromStr for RequirementKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "functional" => Ok(RequirementKind::Functional),
            "non_functional" | "non-functional" => Ok(RequirementKind::NonFunctional),
            other => Err(format!("unknown requirement kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskLevel {
    Low,
    Medium,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskCategory {
    ProductEngineering,
    DevelopmentEnvironment,
    ProgramConstraints,
}

/// `category` is optional on the wire so a missing one can be reported;
/// stored annotations always carry it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RiskAnnotation {
    pub level: RiskLevel,
    #[serde(default)]
    pub category: Option<RiskCategory>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AttributeSet {
    #[serde(default)]
    pub risk: Option<RiskAnnotation>,
    /// 1 (lowest) to 10.
    #[serde(default)]
    pub customer_importance: Option<u8>,
    #[serde(default)]
    pub effort: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QualityAttribute {
    NonAmbiguity,
    Correctness,
    Verifiability,
    Completeness,
    Traceability,
    Consistency,
}

impl QualityAttribute {
    pub const ALL: [QualityAttribute; 6] = [
        QualityAttribute::NonAmbiguity,
        QualityAttribute::Correctness,
        QualityAttribute::Verifiability,
        QualityAttribute::Completeness,
        QualityAttribute::Traceability,
        QualityAttribute::Consistency,
    ];

    /// Attributes that can only be fully verified over the complete
    /// requirement set.
    pub const GLOBAL_ONLY: [QualityAttribute; 3] = [
        QualityAttribute::Completeness,
        QualityAttribute::Traceability,
        QualityAttribute::Consistency,
    ];

    pub fn is_global_only(self) -> bool {
        Self::GLOBAL_ONLY.contains(&self)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            QualityAttribute::NonAmbiguity => "non_ambiguity",
            QualityAttribute::Correctness => "correctness",
            QualityAttribute::Verifiability => "verifiability",
            QualityAttribute::Completeness => "completeness",
            QualityAttribute::Traceability => "traceability",
            QualityAttribute::Consistency => "consistency",
        }
    }
}

impl FromStr for QualityAttribute {
    type Err = super::WorkflowError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| super::WorkflowError::UnknownAttribute(s.to_owned()))
    }
}

impl fmt::Display for QualityAttribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerificationStatus {
    Unverified,
    Partial,
    Verified,
}

impl FromStr for VerificationStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "unverified" => Ok(VerificationStatus::Unverified),
            "partial" => Ok(VerificationStatus::Partial),
            "verified" => Ok(VerificationStatus::Verified),
            other => Err(format!("unknown verification status `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerificationScope {
    Local,
    Global,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationMark {
    pub status: VerificationStatus,
    pub scope: VerificationScope,
    pub note: String,
}

impl VerificationMark {
    pub fn unverified() -> Self {
        VerificationMark {
            status: VerificationStatus::Unverified,
            scope: VerificationScope::Local,
            note: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequirementRecord {
    pub id: String,
    pub text: String,
    pub kind: RequirementKind,
    pub parent: Option<String>,
    pub attributes: AttributeSet,
    pub rationale: Option<String>,
    pub need_links: Vec<String>,
    pub models: Vec<String>,
    /// Always holds all six attributes.
    pub verification: BTreeMap<QualityAttribute, VerificationMark>,
}

impl RequirementRecord {
    pub fn mark(&self, attribute: QualityAttribute) -> &VerificationMark {
        &self.verification[&attribute]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub id: String,
    pub kind: String,
    pub uri_or_blob: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConflictStatus {
    Open,
    Resolved,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConflictRecord {
    pub id: String,
    pub requirement_ids: Vec<String>,
    pub description: String,
    /// Required when only one requirement is involved.
    pub external_note: Option<String>,
    pub status: ConflictStatus,
    pub resolution: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChecklistItem {
    pub passed: bool,
    pub evidence: String,
}

/// The three Local Analysis exit criteria.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChecklistResult {
    pub quality_inspected: ChecklistItem,
    pub traced_to_needs: ChecklistItem,
    pub stakeholder_agreement: ChecklistItem,
    pub pass: bool,
}

impl ChecklistResult {
    pub fn items(&self) -> [(&'static str, &ChecklistItem); 3] {
        [
            ("quality_inspected", &self.quality_inspected),
            ("traced_to_needs", &self.traced_to_needs),
            ("stakeholder_agreement", &self.stakeholder_agreement),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodLogEntry {
    pub activity: String,
    pub method: String,
    pub at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Attestation {
    pub agreed: bool,
    pub note: String,
}

/// Changes applied by `organize`; absent fields are left untouched.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OrganizeChange {
    #[serde(default)]
    pub kind: Option<RequirementKind>,
    #[serde(default)]
    pub parent: Option<String>,
    #[serde(default)]
    pub clear_parent: bool,
    #[serde(default)]
    pub attributes: Option<AttributeSet>,
}
