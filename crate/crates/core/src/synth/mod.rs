//! Unit-selection concatenative synthesis over an aligned corpus.
//!
//! Units are diphones cut at phone midpoints, plus utterance-initial and
//! utterance-final half units. Missing diphones back off to a right half of
//! the first phone joined to a left half of the second.

mod index;
mod plan;

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use index::{build_unit_index, Unit, UnitIndex, INDEX_HEADER};
pub use plan::{plan_synthesis, target_labels, PlanStep, SynthPlan};

use crate::aligner::PAUSE_PHONE;
use crate::audio::{resample, write_wav, AudioClip, AudioError};
use crate::corpus::{load_utterance, CorpusError, Manifest, Utterance};
use crate::textnorm::{g2p, G2pTable, WORD_BOUNDARY};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("nothing to synthesize: text has no phones")]
    EmptyText,
    #[error("cannot synthesize, no units for: {}", .0.join(", "))]
    Unsynthesizable(Vec<String>),
    #[error("utterance {0} has no phone segmentation")]
    MissingSegmentation(String),
    #[error("utterance {0} is not in the index")]
    UnknownUtterance(String),
    #[error("bad index file: {0}")]
    IndexFormat(String),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthWeights {
    pub join: f64,
    pub target: f64,
    pub crossfade_ms: f64,
}

impl Default for SynthWeights {
    fn default() -> Self {
        Self {
            join: 1.0,
            target: 0.2,
            crossfade_ms: 10.0,
        }
    }
}

impl SynthWeights {
    pub fn validate(&self) -> Result<(), SynthError> {
        for (name, v) in [("join", self.join), ("target", self.target), ("crossfade", self.crossfade_ms)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(SynthError::InvalidWeights(format!("{name} must be a non-negative number, got {v}")));
            }
        }
        Ok(())
    }
}

pub(crate) fn is_speech(phone: &str) -> bool {
    phone != PAUSE_PHONE && phone != WORD_BOUNDARY
}

/// Phones of a segmentation or a G2P result, without pauses and word
/// boundaries.
pub(crate) fn speech_phones<'a>(phones: impl IntoIterator<Item = &'a str>) -> Vec<String> {
    phones.into_iter().filter(|p| is_speech(p)).map(str::to_string).collect()
}

/// An index together with its decoded audio, ready to synthesize.
#[derive(Debug, Clone)]
pub struct Voice {
    pub index: UnitIndex,
    clips: HashMap<String, AudioClip>,
}

impl Voice {
    pub fn load(index: UnitIndex) -> Result<Self, SynthError> {
        let clips = index
            .utterances
            .par_iter()
            .map(|u| Ok((u.id.clone(), load_indexed(u, index.sample_rate)?)))
            .collect::<Result<HashMap<_, _>, SynthError>>()?;
        Ok(Self { index, clips })
    }

    pub fn open(path: impl AsRef<Path>) -> Result<Self, SynthError> {
        Self::load(UnitIndex::load(path)?)
    }

    /// Synthesize `text`; the plan says which units were used.
    pub fn synthesize(&self, text: &str, table: &G2pTable, weights: &SynthWeights) -> Result<(AudioClip, SynthPlan), SynthError> {
        let phones = speech_phones(g2p(text, table).iter().map(String::as_str));
        let plan = plan_synthesis(&self.index, &phones, weights)?;
        let audio = self.render(&plan, weights)?;
        Ok((audio, plan))
    }

    /// Concatenate the plan's units with raised-cosine cross-fades.
    pub fn render(&self, plan: &SynthPlan, weights: &SynthWeights) -> Result<AudioClip, SynthError> {
        weights.validate()?;
        let rate = self.index.sample_rate;
        let xf = (weights.crossfade_ms * rate as f64 / 1000.0).round() as usize;
        let units: Vec<&Unit> = plan.steps.iter().flat_map(|s| &s.units).collect();
        let mut pieces = Vec::with_capacity(units.len());
        for (k, u) in units.iter().enumerate() {
            let clip = self
                .clips
                .get(&u.utterance)
                .ok_or_else(|| SynthError::UnknownUtterance(u.utterance.clone()))?;
            // margins so that each cross-fade is centred on the cut point
            let left = if k == 0 { 0 } else { xf / 2 };
            let right = if k + 1 == units.len() { 0 } else { xf - xf / 2 };
            let a = u.start_sample.saturating_sub(left);
            let b = (u.end_sample + right).min(clip.len());
            pieces.push(&clip.samples()[a..b]);
        }
        Ok(AudioClip::new(crossfade_concat(&pieces, xf), rate)?)
    }
}

fn load_indexed(u: &Utterance, rate: u32) -> Result<AudioClip, SynthError> {
    let clip = load_utterance(Path::new(""), u)?;
    Ok(if clip.sample_rate() == rate { clip } else { resample(&clip, rate)? })
}

/// Overlap-add of consecutive pieces. Each join overlaps
/// `min(xf, len_prev, len_next)` samples, faded with complementary
/// raised-cosine ramps.
pub fn crossfade_concat(pieces: &[&[f32]], xf: usize) -> Vec<f32> {
    let mut out: Vec<f32> = Vec::with_capacity(pieces.iter().map(|p| p.len()).sum());
    let mut prev_len = 0usize;
    for (k, piece) in pieces.iter().enumerate() {
        let overlap = if k == 0 { 0 } else { xf.min(prev_len).min(piece.len()) };
        let base = out.len() - overlap;
        for i in 0..overlap {
            let fade_in = 0.5 - 0.5 * (std::f64::consts::PI * (i as f64 + 0.5) / overlap as f64).cos();
            let mixed = out[base + i] as f64 * (1.0 - fade_in) + piece[i] as f64 * fade_in;
            out[base + i] = mixed as f32;
        }
        out.extend_from_slice(&piece[overlap..]);
        prev_len = piece.len();
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchFailure {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchOutput {
    pub manifest: Manifest,
    pub failures: Vec<BatchFailure>,
}

/// Synthesize every `(id, text)` prompt into `out_dir/<id>.wav`. A failing
/// prompt is recorded and skipped; the rest still run.
pub fn batch_synthesize(
    voice: &Voice,
    prompts: &[(String, String)],
    table: &G2pTable,
    weights: &SynthWeights,
    out_dir: &Path,
    template: &Manifest,
) -> Result<BatchOutput, SynthError> {
    std::fs::create_dir_all(out_dir)?;
    let results: Vec<Result<Utterance, BatchFailure>> = prompts
        .par_iter()
        .map(|(id, text)| {
            let fail = |reason: String| BatchFailure { id: id.clone(), reason };
            let (audio, _) = voice.synthesize(text, table, weights).map_err(|e| fail(e.to_string()))?;
            let file = format!("{id}.wav");
            let path: PathBuf = out_dir.join(&file);
            write_wav(&path, &audio).map_err(|e| fail(e.to_string()))?;
            Ok(Utterance {
                id: id.clone(),
                audio: file,
                start: 0.0,
                end: audio.duration_seconds(),
                speaker: "synth".into(),
                text: text.clone(),
                score: None,
            })
        })
        .collect();
    let mut manifest = Manifest {
        utterances: vec![],
        ..template.clone()
    };
    let mut failures = vec![];
    for r in results {
        match r {
            Ok(u) => manifest.utterances.push(u),
            Err(f) => failures.push(f),
        }
    }
    Ok(BatchOutput { manifest, failures })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossfade_length_accounting() {
        let a = vec![1.0f32; 100];
        let b = vec![1.0f32; 5];
        let c = vec![1.0f32; 50];
        let out = crossfade_concat(&[&a, &b, &c], 16);
        assert_eq!(out.len(), 155 - 5 - 5);
        // complementary ramps keep a constant signal constant
        assert!(out.iter().all(|&x| (x - 1.0).abs() < 1e-6));
        assert!(crossfade_concat(&[], 16).is_empty());
        assert_eq!(crossfade_concat(&[&a, &c], 0).len(), 150);
    }

    #[test]
    fn weights_must_be_non_negative() {
        assert!(SynthWeights { join: -1.0, ..SynthWeights::default() }.validate().is_err());
        assert!(SynthWeights::default().validate().is_ok());
    }
}
