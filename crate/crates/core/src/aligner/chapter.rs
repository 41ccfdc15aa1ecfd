use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{accumulate_stats, estimate_models, PhoneModelSet, PhoneStats, DEFAULT_VARIANCE_FLOOR};
use super::viterbi::{viterbi_slots, PhoneSlot};
use super::{flat_segment, snap_to_silence, AlignError, Segmentation};
use crate::audio::level::{activity_from_energies, frame_energies_db};
use crate::audio::{mfcc, AudioClip, FeatureTrack, MfccConfig};
use crate::textnorm::{NormalizedText, WORD_BOUNDARY};

/// Phone symbol for optional inter-verse pauses.
pub const PAUSE_PHONE: &str = "sil";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlignerConfig {
    pub mfcc: MfccConfig,
    pub min_duration_frames: usize,
    pub variance_floor: f64,
    pub max_iterations: usize,
    /// Stop once the mean absolute phone-boundary movement drops below this.
    pub convergence_epsilon: f64,
    pub snap_window_frames: usize,
    pub vad_threshold_db: f64,
    /// Put an optional pause before, between and after verses.
    pub insert_pauses: bool,
}

impl Default for AlignerConfig {
    fn default() -> Self {
        Self {
            mfcc: MfccConfig::default(),
            min_duration_frames: 3,
            variance_floor: DEFAULT_VARIANCE_FLOOR,
            max_iterations: 10,
            convergence_epsilon: 0.5,
            snap_window_frames: 20,
            vad_threshold_db: 30.0,
            insert_pauses: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verse {
    pub id: String,
    pub text: NormalizedText,
}

impl Verse {
    fn phones(&self) -> impl Iterator<Item = &String> {
        self.text.phones.iter().filter(|p| *p != WORD_BOUNDARY)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhoneSpan {
    pub phone: String,
    pub start_time: f64,
    pub end_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceAlignment {
    pub verse_id: String,
    pub text: String,
    pub start_time: f64,
    pub end_time: f64,
    /// Mean per-frame negative log-likelihood; lower is better.
    pub score: f64,
    pub phones: Vec<PhoneSpan>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChapterAlignment {
    pub utterances: Vec<UtteranceAlignment>,
    pub iterations: usize,
    pub converged: bool,
    /// Viterbi cost after each iteration.
    pub cost_history: Vec<f64>,
}

pub struct ChapterInput {
    pub audio: AudioClip,
    pub verses: Vec<Verse>,
}

/// Features and phone slots for one chapter.
struct Prepared {
    features: FeatureTrack,
    slots: Vec<PhoneSlot>,
    slot_verse: Vec<Option<usize>>,
    activity: Vec<bool>,
    energies: Vec<f64>,
    hop: usize,
    frame_len: usize,
    sample_rate: u32,
    num_samples: usize,
}

impl Prepared {
    fn new(audio: &AudioClip, verses: &[Verse], config: &AlignerConfig) -> Result<Self, AlignError> {
        if verses.is_empty() {
            return Err(AlignError::NoVerses);
        }
        let mut slots = Vec::new();
        let mut slot_verse = Vec::new();
        for (v, verse) in verses.iter().enumerate() {
            if config.insert_pauses {
                slots.push(PhoneSlot::optional(PAUSE_PHONE));
                slot_verse.push(None);
            }
            let before = slots.len();
            for p in verse.phones() {
                slots.push(PhoneSlot::required(p.clone()));
                slot_verse.push(Some(v));
            }
            if slots.len() == before {
                return Err(AlignError::EmptyVerse(verse.id.clone()));
            }
        }
        if config.insert_pauses {
            slots.push(PhoneSlot::optional(PAUSE_PHONE));
            slot_verse.push(None);
        }
        let rate = audio.sample_rate();
        let frame_len = config.mfcc.frame_len_samples(rate);
        let hop = config.mfcc.hop_samples(rate);
        let needed = slot_verse.iter().filter(|v| v.is_some()).count() * config.min_duration_frames;
        let frames = config.mfcc.frame_count(audio.len(), rate);
        if frames < needed.max(1) {
            return Err(AlignError::TooShort { frames, needed });
        }
        let features = mfcc(audio, &config.mfcc)?;
        // hop-sized windows centred on each feature frame
        let offset = (frame_len.saturating_sub(hop) / 2).min(audio.len());
        let energies = frame_energies_db(&audio.samples()[offset..], features.frame_count(), hop, hop);
        let activity = activity_from_energies(&energies, config.vad_threshold_db);
        Ok(Self {
            features,
            slots,
            slot_verse,
            activity,
            energies,
            hop,
            frame_len,
            sample_rate: rate,
            num_samples: audio.len(),
        })
    }

    /// Time in seconds of the boundary before frame `b`: midway between the
    /// centres of frames `b - 1` and `b`.
    fn boundary_time(&self, b: usize) -> f64 {
        let duration = self.num_samples as f64 / self.sample_rate as f64;
        if b == 0 {
            return 0.0;
        }
        if b >= self.features.frame_count() {
            return duration;
        }
        let samples = b as f64 * self.hop as f64 + (self.frame_len as f64 - self.hop as f64) / 2.0;
        (samples / self.sample_rate as f64).min(duration)
    }

    fn viterbi(&self, models: &PhoneModelSet, config: &AlignerConfig) -> Result<Segmentation, AlignError> {
        viterbi_slots(&self.features, &self.slots, models, config.min_duration_frames)
    }

    /// End frame of every required slot.
    fn required_ends(&self, seg: &Segmentation) -> Vec<usize> {
        seg.segments
            .iter()
            .zip(&seg.slot_indices)
            .filter(|(_, &slot)| !self.slots[slot].optional)
            .map(|(s, _)| s.end)
            .collect()
    }
}

struct KMeansOutcome {
    seg: Segmentation,
    iterations: usize,
    converged: bool,
    history: Vec<f64>,
}

fn segmental_kmeans(prep: &Prepared, config: &AlignerConfig) -> Result<KMeansOutcome, AlignError> {
    let phones: Vec<String> = prep.slots.iter().map(|s| s.phone.clone()).collect();
    let mut seg = flat_segment(&phones, prep.features.frame_count(), 1)?;
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_iterations.max(1) {
        iterations += 1;
        let mut models = estimate_models(&prep.features, &seg, config.variance_floor);
        if iterations == 1 {
            seed_pause_model(prep, &mut models, config);
        }
        let next = prep.viterbi(&models, config)?;
        history.push(next.total_cost);
        let before = prep.required_ends(&seg);
        let after = prep.required_ends(&next);
        let movement = before.iter().zip(&after).map(|(a, b)| a.abs_diff(*b) as f64).sum::<f64>() / after.len().max(1) as f64;
        seg = next;
        if iterations > 1 && movement < config.convergence_epsilon {
            converged = true;
            break;
        }
    }
    Ok(KMeansOutcome {
        seg,
        iterations,
        converged,
        history,
    })
}

/// Frames quiet enough to train the initial pause model on: within
/// `PAUSE_SEED_MARGIN_DB` of the 5th-percentile frame energy, measured on
/// the span from that percentile up to the peak. Works with or without a
/// noise floor, unlike the VAD mask.
fn quiet_frames(energies: &[f64]) -> Vec<usize> {
    let mut sorted: Vec<f64> = energies.iter().map(|e| e.max(PAUSE_SEED_FLOOR_DB)).collect();
    sorted.sort_by(f64::total_cmp);
    let Some(&peak) = sorted.last() else {
        return Vec::new();
    };
    let low = sorted[sorted.len() / 20];
    let limit = low + 0.25 * (peak - low);
    if peak - low < PAUSE_SEED_MARGIN_DB {
        return Vec::new();
    }
    (0..energies.len()).filter(|&t| energies[t].max(PAUSE_SEED_FLOOR_DB) <= limit).collect()
}

const PAUSE_SEED_FLOOR_DB: f64 = -100.0;
const PAUSE_SEED_MARGIN_DB: f64 = 10.0;

/// Replace the flat-start pause model with one trained on the quietest
/// frames, so the first pass can find the real gaps.
fn seed_pause_model(prep: &Prepared, models: &mut PhoneModelSet, config: &AlignerConfig) {
    if !config.insert_pauses {
        return;
    }
    let mut stats = PhoneStats::default();
    for t in quiet_frames(&prep.energies) {
        stats.add(prep.features.frame(t));
    }
    if stats.count >= config.min_duration_frames.max(2) {
        let mut map = BTreeMap::new();
        map.insert(PAUSE_PHONE.to_string(), stats);
        let seeded = PhoneModelSet::from_stats(&map, config.variance_floor);
        models.models.insert(PAUSE_PHONE.to_string(), seeded.get(PAUSE_PHONE).clone());
    }
}

fn build_utterances(prep: &Prepared, seg: &Segmentation, verses: &[Verse], config: &AlignerConfig) -> Vec<UtteranceAlignment> {
    let mut utterances = Vec::with_capacity(verses.len());
    let mut prev_end = 0usize;
    for (v, verse) in verses.iter().enumerate() {
        let members: Vec<usize> = (0..seg.segments.len())
            .filter(|&i| prep.slot_verse[seg.slot_indices[i]] == Some(v))
            .collect();
        let (first, last) = (members[0], *members.last().unwrap());
        let raw_start = seg.segments[first].start;
        let raw_end = seg.segments[last].end;
        let mut start = snap_to_silence(raw_start, &prep.activity, config.snap_window_frames);
        let mut end = snap_to_silence(raw_end, &prep.activity, config.snap_window_frames);
        if start < prev_end || start >= raw_end {
            start = raw_start.max(prev_end);
        }
        if end <= start {
            end = raw_end;
        }
        prev_end = end;

        let frames: usize = members.iter().map(|&i| seg.segments[i].len()).sum();
        let cost: f64 = members.iter().map(|&i| seg.segment_costs[i]).sum();
        let (start_time, end_time) = (prep.boundary_time(start), prep.boundary_time(end));
        let phones = members
            .iter()
            .map(|&i| {
                let s = &seg.segments[i];
                PhoneSpan {
                    phone: s.phone.clone(),
                    start_time: prep.boundary_time(s.start).clamp(start_time, end_time),
                    end_time: prep.boundary_time(s.end).clamp(start_time, end_time),
                }
            })
            .collect();
        utterances.push(UtteranceAlignment {
            verse_id: verse.id.clone(),
            text: verse.text.normalized.clone(),
            start_time,
            end_time,
            score: cost / frames as f64,
            phones,
        });
    }
    utterances
}

/// Align one chapter recording to its verses.
///
/// Starts from a flat segmentation and alternates model estimation and
/// Viterbi re-segmentation until the phone boundaries settle or
/// `max_iterations` is reached. Not converging is reported, not an error.
pub fn align_chapter(audio: &AudioClip, verses: &[Verse], config: &AlignerConfig) -> Result<ChapterAlignment, AlignError> {
    let prep = Prepared::new(audio, verses, config)?;
    let outcome = segmental_kmeans(&prep, config)?;
    Ok(ChapterAlignment {
        utterances: build_utterances(&prep, &outcome.seg, verses, config),
        iterations: outcome.iterations,
        converged: outcome.converged,
        cost_history: outcome.history,
    })
}

/// Align chapters independently (in parallel), optionally followed by one
/// realignment pass with models pooled over every chapter.
pub fn align_corpus(chapters: &[ChapterInput], config: &AlignerConfig, pooled: bool) -> Vec<Result<ChapterAlignment, AlignError>> {
    let first_pass: Vec<Result<(Prepared, KMeansOutcome), AlignError>> = chapters
        .par_iter()
        .map(|c| {
            let prep = Prepared::new(&c.audio, &c.verses, config)?;
            let outcome = segmental_kmeans(&prep, config)?;
            Ok((prep, outcome))
        })
        .collect();

    let pooled_models = pooled.then(|| {
        let mut stats = BTreeMap::new();
        for (prep, outcome) in first_pass.iter().flatten() {
            accumulate_stats(&prep.features, &outcome.seg, &mut stats);
        }
        PhoneModelSet::from_stats(&stats, config.variance_floor)
    });

    first_pass
        .into_par_iter()
        .zip(chapters.par_iter())
        .map(|(result, chapter)| {
            let (prep, mut outcome) = result?;
            if let Some(models) = &pooled_models {
                outcome.seg = prep.viterbi(models, config)?;
            }
            Ok(ChapterAlignment {
                utterances: build_utterances(&prep, &outcome.seg, &chapter.verses, config),
                iterations: outcome.iterations,
                converged: outcome.converged,
                cost_history: outcome.history,
            })
        })
        .collect()
}
