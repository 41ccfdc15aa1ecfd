//! Listening-test service: A/B preference and transcription campaigns
//! served over HTTP, with an append-only JSON-lines event log.
//!
//! | method | path | |
//! |---|---|---|
//! | POST | `/campaigns` | create from a [`CampaignDefinition`] |
//! | GET | `/campaigns/{id}` | summary and item ids |
//! | POST | `/campaigns/{id}/close` | stop issuing tasks |
//! | GET | `/campaigns/{id}/next?session=S` | [`NextTask`] |
//! | POST | `/responses` | `{task_id, session, choice}` or `{task_id, session, transcription}` |
//! | GET | `/campaigns/{id}/results` | [`CampaignResults`] |
//! | GET | `/audit` | [`AuditReport`] |
//! | GET | `/audio/{path}` | audio files, range requests supported |

mod campaign;
mod http;
mod results;
mod service;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use campaign::{
    validate_definition, Campaign, CampaignBody, CampaignDefinition, CampaignKind, PreferencePair, SystemClip,
    TranscriptionItem, PREFERENCE_INSTRUCTIONS, TRANSCRIPTION_INSTRUCTIONS,
};
pub use http::{router, serve, ServerConfig};
pub use results::{CampaignResults, EvaluatorCer, TranscriptionScore};
pub use service::{
    Answer, AuditReport, CampaignSummary, ListenService, NextTask, Progress, Response, StoredAnswer, Task, LOG_FILE,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum ListenError {
    #[error("invalid campaign definition: {}", .0.iter().map(|f| format!("{}: {}", f.field, f.message)).collect::<Vec<_>>().join("; "))]
    InvalidDefinition(Vec<FieldError>),
    #[error("audio not found: {}", .0.join(", "))]
    MissingAudio(Vec<String>),
    #[error("campaign {0:?} already exists")]
    DuplicateCampaign(String),
    #[error("no campaign {0:?}")]
    UnknownCampaign(String),
    #[error("campaign {0:?} is closed")]
    Closed(String),
    #[error("session ids must be 1-128 printable characters")]
    InvalidSession,
    #[error("no task {0:?}")]
    UnknownTask(String),
    #[error("task {0:?} was issued to another session")]
    WrongSession(String),
    #[error("task {0:?} already has a response")]
    Duplicate(String),
    #[error("answer not allowed here: {0}")]
    Domain(String),
    #[error("event log line {line}: {message}")]
    CorruptLog { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl ListenError {
    /// Stable machine-readable name.
    pub fn code(&self) -> &'static str {
        match self {
            ListenError::InvalidDefinition(_) => "invalid_definition",
            ListenError::MissingAudio(_) => "missing_audio",
            ListenError::DuplicateCampaign(_) => "duplicate_campaign",
            ListenError::UnknownCampaign(_) => "unknown_campaign",
            ListenError::Closed(_) => "closed",
            ListenError::InvalidSession => "invalid_session",
            ListenError::UnknownTask(_) => "unknown_task",
            ListenError::WrongSession(_) => "wrong_session",
            ListenError::Duplicate(_) => "duplicate",
            ListenError::Domain(_) => "domain",
            ListenError::CorruptLog { .. } => "corrupt_log",
            ListenError::Io(_) => "io",
            ListenError::Json(_) => "json",
        }
    }
}
