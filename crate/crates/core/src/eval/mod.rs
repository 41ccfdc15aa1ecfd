//! Objective and listening-test scoring: mel cepstral distortion, character
//! error rate, and A/B preference tallies.

mod cer;
mod mcd;
mod tally;

use thiserror::Error;

pub use cer::{cer, levenshtein, CerProfile, CerResult};
pub use mcd::{mcd, mcd_significant, mcd_testset, McdResult, UtteranceMcd, MCD_SIGNIFICANCE_DB};
pub use tally::{tally_preferences, EvaluatorRow, PreferenceChoice, PreferenceItem, PreferenceResponse, PreferenceTally, Winner};

use crate::audio::AudioError;
use crate::corpus::CorpusError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("empty feature track")]
    EmptyTrack,
    #[error("feature dimensions differ: {0} vs {1}")]
    DimMismatch(usize, usize),
    #[error("reference is empty after normalization")]
    EmptyReference,
    #[error("no utterance ids in common")]
    NoOverlap,
    #[error("response for unknown item {0:?}")]
    UnknownItem(String),
    #[error("utterance {id}: {source}")]
    Utterance { id: String, source: AudioError },
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}
