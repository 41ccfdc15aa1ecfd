use std::collections::HashSet;
use std::path::{Component, Path};

use serde::{Deserialize, Serialize};

use crate::{FieldError, ListenError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemClip {
    /// Path under the audio directory.
    pub audio: String,
    pub system: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreferencePair {
    pub id: String,
    pub a: SystemClip,
    pub b: SystemClip,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptionItem {
    pub id: String,
    pub audio: String,
    /// Never sent to evaluators.
    pub reference: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CampaignBody {
    Preference { items: Vec<PreferencePair> },
    Transcription { items: Vec<TranscriptionItem> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CampaignKind {
    Preference,
    Transcription,
}

/// What a client posts to create a campaign.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CampaignDefinition {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default)]
    pub instructions: Option<String>,
    /// Seeds item order and A/B presentation.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(flatten)]
    pub body: CampaignBody,
}

pub const PREFERENCE_INSTRUCTIONS: &str =
    "Listen to the two audio clips below and select the one you prefer: A, B, or No difference.";
pub const TRANSCRIPTION_INSTRUCTIONS: &str = "Listen to the audio clip and type what you hear.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Campaign {
    pub id: String,
    pub instructions: String,
    pub seed: u64,
    pub body: CampaignBody,
    pub open: bool,
}

impl Campaign {
    pub fn kind(&self) -> CampaignKind {
        match self.body {
            CampaignBody::Preference { .. } => CampaignKind::Preference,
            CampaignBody::Transcription { .. } => CampaignKind::Transcription,
        }
    }

    pub fn item_ids(&self) -> Vec<&str> {
        match &self.body {
            CampaignBody::Preference { items } => items.iter().map(|i| i.id.as_str()).collect(),
            CampaignBody::Transcription { items } => items.iter().map(|i| i.id.as_str()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        match &self.body {
            CampaignBody::Preference { items } => items.len(),
            CampaignBody::Transcription { items } => items.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Audio refs of item `idx` in stored order.
    pub fn audio_of(&self, idx: usize) -> Vec<&str> {
        match &self.body {
            CampaignBody::Preference { items } => vec![&items[idx].a.audio, &items[idx].b.audio],
            CampaignBody::Transcription { items } => vec![&items[idx].audio],
        }
    }
}

fn id_ok(id: &str) -> bool {
    !id.is_empty() && id.len() <= 128 && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

/// A relative path that stays inside the audio directory.
fn audio_ref_ok(r: &str) -> bool {
    let p = Path::new(r);
    !r.is_empty() && p.components().all(|c| matches!(c, Component::Normal(_)))
}

/// Check a definition; every problem is reported, not just the first.
pub fn validate_definition(def: &CampaignDefinition, audio_dir: &Path) -> Result<(), ListenError> {
    let mut errors = Vec::new();
    let mut err = |field: String, message: &str| errors.push(FieldError { field, message: message.into() });
    if let Some(id) = &def.id {
        if !id_ok(id) {
            err("id".into(), "campaign id must be 1-128 characters of [A-Za-z0-9_.-]");
        }
    }
    let mut refs: Vec<(String, &str)> = Vec::new();
    let mut seen = HashSet::new();
    let ids: Vec<&str> = match &def.body {
        CampaignBody::Preference { items } => {
            for (i, it) in items.iter().enumerate() {
                if it.a.system.trim().is_empty() || it.b.system.trim().is_empty() {
                    err(format!("items[{i}]"), "system labels must be non-empty");
                } else if it.a.system == it.b.system {
                    err(format!("items[{i}]"), "the two clips must come from different systems");
                }
                refs.push((format!("items[{i}].a.audio"), &it.a.audio));
                refs.push((format!("items[{i}].b.audio"), &it.b.audio));
            }
            items.iter().map(|i| i.id.as_str()).collect()
        }
        CampaignBody::Transcription { items } => {
            for (i, it) in items.iter().enumerate() {
                if it.reference.trim().is_empty() {
                    err(format!("items[{i}].reference"), "reference text must be non-empty");
                }
                refs.push((format!("items[{i}].audio"), &it.audio));
            }
            items.iter().map(|i| i.id.as_str()).collect()
        }
    };
    if ids.is_empty() {
        err("items".into(), "a campaign needs at least one item");
    }
    for (i, id) in ids.iter().enumerate() {
        if !id_ok(id) {
            err(format!("items[{i}].id"), "item id must be 1-128 characters of [A-Za-z0-9_.-]");
        }
        if !seen.insert(*id) {
            err(format!("items[{i}].id"), "duplicate item id");
        }
    }
    let mut missing = Vec::new();
    for (field, r) in refs {
        if !audio_ref_ok(r) {
            err(field, "audio must be a relative path inside the audio directory");
        } else if !audio_dir.join(r).is_file() {
            missing.push(r.to_string());
        }
    }
    if !errors.is_empty() {
        return Err(ListenError::InvalidDefinition(errors));
    }
    if !missing.is_empty() {
        return Err(ListenError::MissingAudio(missing));
    }
    Ok(())
}
