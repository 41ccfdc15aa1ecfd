//! Shared DSP substrate: waveform I/O, resampling, activity detection,
//! level normalization, MFCC extraction and DTW.

mod dtw;
pub(crate) mod level;
mod mfcc;
mod resample;
mod wav;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dtw::{dtw, AlignmentPath};
pub use level::{active_rms_dbfs, energy_vad, power_normalize, NormalizeReport, DEFAULT_TARGET_DBFS, DEFAULT_VAD_THRESHOLD_DB};
pub use mfcc::{mfcc, MfccConfig, WindowType};
pub use resample::resample;
pub use wav::{load_wav, write_wav};

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("audio file not found: {}", .0.display())]
    NotFound(PathBuf),
    #[error("unsupported audio in {}: {reason} (only PCM WAV is read; convert mp3 externally)", path.display())]
    Unsupported { path: PathBuf, reason: String },
    #[error("truncated data chunk in {}", .0.display())]
    Truncated(PathBuf),
    #[error("invalid audio: {0}")]
    Invalid(String),
    #[error("recording is silent: no active frames")]
    Silent,
    #[error("clip of {samples} samples is shorter than one {frame}-sample frame")]
    TooShort { samples: usize, frame: usize },
    #[error("feature dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),
    #[error("empty feature track")]
    EmptyTrack,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Mono PCM waveform with samples in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f32>,
    sample_rate: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Result<Self, AudioError> {
        if sample_rate == 0 {
            return Err(AudioError::Invalid("sample rate must be positive".into()));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(AudioError::Invalid(format!("non-finite sample at index {i}")));
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f32> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn peak(&self) -> f32 {
        self.samples.iter().fold(0.0f32, |m, s| m.max(s.abs()))
    }

    /// Copy of the samples in `[start, end)`, clamped to the clip.
    pub fn slice(&self, start: usize, end: usize) -> AudioClip {
        let end = end.min(self.samples.len());
        let start = start.min(end);
        AudioClip {
            samples: self.samples[start..end].to_vec(),
            sample_rate: self.sample_rate,
        }
    }
}

/// Frame matrix of cepstral coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTrack {
    frames: Vec<Vec<f64>>,
    pub frame_shift_ms: f64,
    pub frame_length_ms: f64,
    pub includes_c0: bool,
}

impl FeatureTrack {
    pub fn new(
        frames: Vec<Vec<f64>>,
        frame_shift_ms: f64,
        frame_length_ms: f64,
        includes_c0: bool,
    ) -> Result<Self, AudioError> {
        if let Some(first) = frames.first() {
            let dim = first.len();
            if let Some(bad) = frames.iter().find(|f| f.len() != dim) {
                return Err(AudioError::DimMismatch(dim, bad.len()));
            }
        }
        if frames.iter().flatten().any(|v| !v.is_finite()) {
            return Err(AudioError::Invalid("non-finite feature value".into()));
        }
        Ok(Self {
            frames,
            frame_shift_ms,
            frame_length_ms,
            includes_c0,
        })
    }

    /// A track with the default 10 ms / 25 ms framing, mostly for tests.
    pub fn from_frames(frames: Vec<Vec<f64>>) -> Result<Self, AudioError> {
        Self::new(frames, 10.0, 25.0, false)
    }

    pub fn frames(&self) -> &[Vec<f64>] {
        &self.frames
    }

    pub fn frame(&self, i: usize) -> &[f64] {
        &self.frames[i]
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn dim(&self) -> usize {
        self.frames.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Keep only the coefficients in `range` of every frame.
    pub fn select_dims(&self, range: std::ops::Range<usize>) -> FeatureTrack {
        FeatureTrack {
            frames: self.frames.iter().map(|f| f[range.clone()].to_vec()).collect(),
            frame_shift_ms: self.frame_shift_ms,
            frame_length_ms: self.frame_length_ms,
            includes_c0: self.includes_c0 && range.start == 0,
        }
    }
}

pub(crate) fn ms_to_samples(ms: f64, sample_rate: u32) -> usize {
    (ms * sample_rate as f64 / 1000.0).round() as usize
}
