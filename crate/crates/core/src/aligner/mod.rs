//! Long-form audio segmentation by segmental k-means: alternate per-phone
//! Gaussian estimation with Viterbi re-segmentation, then cut at verse
//! junctions snapped to silence.

mod chapter;
mod model;
mod viterbi;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use chapter::{align_chapter, align_corpus, AlignerConfig, ChapterAlignment, ChapterInput, PhoneSpan, UtteranceAlignment, Verse, PAUSE_PHONE};
pub use model::{accumulate_stats, estimate_models, Gaussian, PhoneModelSet, PhoneStats, DEFAULT_VARIANCE_FLOOR};
pub use viterbi::{segmentation_cost, viterbi_segment, viterbi_slots, PhoneSlot};

use crate::audio::AudioError;

#[derive(Debug, Error)]
pub enum AlignError {
    #[error("{frames} frames cannot hold the phone sequence ({needed} needed)")]
    TooShort { frames: usize, needed: usize },
    #[error("empty phone sequence")]
    EmptyPhoneSequence,
    #[error("no verses to align")]
    NoVerses,
    #[error("verse {0:?} has no phones")]
    EmptyVerse(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Text(#[from] crate::textnorm::TextError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub phone: String,
    pub start: usize,
    /// Exclusive.
    pub end: usize,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

/// Contiguous phone segments covering `[0, frame_count)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segmentation {
    pub segments: Vec<Segment>,
    pub total_cost: f64,
    /// Mean per-frame cost for each phone.
    pub per_phone_avg_cost: BTreeMap<String, f64>,
    /// Summed frame cost of each segment, when computed by a search.
    pub segment_costs: Vec<f64>,
    /// Index into the searched slot list of each segment.
    pub slot_indices: Vec<usize>,
}

impl Segmentation {
    pub fn from_segments(segments: Vec<Segment>) -> Self {
        let slot_indices = (0..segments.len()).collect();
        Self {
            segments,
            total_cost: 0.0,
            per_phone_avg_cost: BTreeMap::new(),
            segment_costs: Vec::new(),
            slot_indices,
        }
    }

    pub fn frame_count(&self) -> usize {
        self.segments.last().map_or(0, |s| s.end)
    }

    pub(crate) fn set_segment_costs(&mut self, costs: &[f64]) {
        let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
        for (s, c) in self.segments.iter().zip(costs) {
            let e = sums.entry(s.phone.clone()).or_default();
            e.0 += c;
            e.1 += s.len();
        }
        self.per_phone_avg_cost = sums.into_iter().map(|(p, (c, n))| (p, c / n as f64)).collect();
        self.segment_costs = costs.to_vec();
    }
}

/// Equal split of `frame_count` frames over the phones, remainder handed out
/// one frame at a time from the left.
pub fn flat_segment(phones: &[String], frame_count: usize, min_duration: usize) -> Result<Segmentation, AlignError> {
    if phones.is_empty() {
        return Err(AlignError::EmptyPhoneSequence);
    }
    let needed = phones.len() * min_duration;
    if frame_count < needed || frame_count < phones.len() {
        return Err(AlignError::TooShort {
            frames: frame_count,
            needed: needed.max(phones.len()),
        });
    }
    let base = frame_count / phones.len();
    let extra = frame_count % phones.len();
    let mut start = 0;
    let segments = phones
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let len = base + usize::from(i < extra);
            let s = Segment {
                phone: p.clone(),
                start,
                end: start + len,
            };
            start += len;
            s
        })
        .collect();
    Ok(Segmentation::from_segments(segments))
}

/// Move a boundary to the nearest inactive frame within `window` frames.
///
/// `mask[t]` is true for active frames. Ties go left. A boundary equal to
/// `mask.len()` (end of track) counts as silence.
pub fn snap_to_silence(boundary: usize, mask: &[bool], window: usize) -> usize {
    let silent = |t: usize| t >= mask.len() || !mask[t];
    if silent(boundary) {
        return boundary;
    }
    for d in 1..=window {
        if d <= boundary && silent(boundary - d) {
            return boundary - d;
        }
        if boundary + d <= mask.len() && silent(boundary + d) {
            return boundary + d;
        }
    }
    boundary
}

/// Keep the `ceil(n * keep_fraction)` lowest-cost utterances, in time order.
pub fn filter_by_score(alignment: &ChapterAlignment, keep_fraction: f64) -> Result<ChapterAlignment, AlignError> {
    if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
        return Err(AlignError::InvalidInput(format!("keep fraction {keep_fraction} not in (0, 1]")));
    }
    let n = alignment.utterances.len();
    let keep = ((n as f64) * keep_fraction).ceil() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    // stable: equal scores keep their original order
    order.sort_by(|&a, &b| alignment.utterances[a].score.total_cmp(&alignment.utterances[b].score));
    let mut kept: Vec<usize> = order.into_iter().take(keep).collect();
    kept.sort_unstable();
    Ok(ChapterAlignment {
        utterances: kept.into_iter().map(|i| alignment.utterances[i].clone()).collect(),
        ..alignment.clone()
    })
}

/// Parse a `verse_id<TAB>text` file.
pub fn read_verses(path: impl AsRef<Path>) -> Result<Vec<(String, String)>, AlignError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (id, verse) = line.split_once('\t').ok_or_else(|| AlignError::Parse {
            path: path.display().to_string(),
            line: i + 1,
            message: "expected verse_id<TAB>text".into(),
        })?;
        out.push((id.trim().to_string(), verse.to_string()));
    }
    Ok(out)
}
