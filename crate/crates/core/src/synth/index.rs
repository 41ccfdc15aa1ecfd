use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{is_speech, load_indexed, SynthError};
use crate::audio::{mfcc, FeatureTrack, MfccConfig};
use crate::corpus::{load_utterance, Manifest, PhoneRecord, Utterance};

/// First line of a saved index.
pub const INDEX_HEADER: &str = "fieldvoice-unit-index 1";

/// A stretch of one utterance, in samples of that utterance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Unit {
    pub utterance: String,
    pub start_sample: usize,
    pub end_sample: usize,
    pub start_frame: usize,
    pub end_frame: usize,
    /// Features of the frames nearest the two cut points.
    pub start_mfcc: Vec<f64>,
    pub end_mfcc: Vec<f64>,
}

impl Unit {
    pub fn samples(&self) -> usize {
        self.end_sample - self.start_sample
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitIndex {
    pub sample_rate: u32,
    pub hop_samples: usize,
    pub mfcc: MfccConfig,
    /// Audio paths are absolute.
    pub utterances: Vec<Utterance>,
    /// Keyed `a-b`, cut from the midpoint of `a` to the midpoint of `b`.
    pub diphones: BTreeMap<String, Vec<Unit>>,
    /// Utterance start to the midpoint of its first phone.
    pub initial: BTreeMap<String, Vec<Unit>>,
    /// Midpoint of the last phone to utterance end.
    pub terminal: BTreeMap<String, Vec<Unit>>,
    pub left_halves: BTreeMap<String, Vec<Unit>>,
    pub right_halves: BTreeMap<String, Vec<Unit>>,
    /// Mean phone duration in frames.
    pub duration_means: BTreeMap<String, f64>,
}

pub(crate) fn diphone_key(a: &str, b: &str) -> String {
    format!("{a}-{b}")
}

impl UnitIndex {
    pub fn diphone_unit_count(&self) -> usize {
        self.diphones.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), SynthError> {
        let mut text = format!("{INDEX_HEADER}\n");
        text.push_str(&serde_json::to_string(self)?);
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SynthError> {
        let text = std::fs::read_to_string(path)?;
        let (header, body) = text.split_once('\n').unwrap_or((&text, ""));
        if header.trim_end() != INDEX_HEADER {
            return Err(SynthError::IndexFormat(format!("expected header {INDEX_HEADER:?}, found {header:?}")));
        }
        Ok(serde_json::from_str(body)?)
    }
}

struct Cut {
    phone: String,
    start: usize,
    mid: usize,
    end: usize,
}

/// Nearest frame centre to sample `x`.
fn frame_at(x: usize, track: &FeatureTrack, frame_len: usize, hop: usize) -> usize {
    let f = ((x as f64 - frame_len as f64 / 2.0) / hop as f64).round().max(0.0) as usize;
    f.min(track.frame_count().saturating_sub(1))
}

/// Build the unit inventory of a segmented corpus. `phones` carries times
/// relative to each utterance (the layout written by `cut_audio`). Pause
/// segments are skipped; a unit spanning a pause keeps it.
pub fn build_unit_index(
    manifest_path: &Path,
    manifest: &Manifest,
    phones: &[PhoneRecord],
    config: &MfccConfig,
) -> Result<UnitIndex, SynthError> {
    config.validate()?;
    let mut by_utt: HashMap<&str, Vec<&PhoneRecord>> = HashMap::new();
    for p in phones {
        by_utt.entry(p.utterance.as_str()).or_default().push(p);
    }
    if let Some(u) = manifest.utterances.iter().find(|u| !by_utt.contains_key(u.id.as_str())) {
        return Err(SynthError::MissingSegmentation(u.id.clone()));
    }
    let mut utterances = Vec::with_capacity(manifest.utterances.len());
    for u in &manifest.utterances {
        let mut abs = u.clone();
        let path = Manifest::resolve_audio(manifest_path, u);
        abs.audio = std::path::absolute(&path).unwrap_or(path).display().to_string();
        utterances.push(abs);
    }
    let sample_rate = match utterances.first() {
        Some(u) => load_utterance(Path::new(""), u)?.sample_rate(),
        None => 16000,
    };
    let frame_len = config.frame_len_samples(sample_rate);
    let hop = config.hop_samples(sample_rate);

    type Found = (Vec<(String, Unit)>, Vec<(String, Unit)>, Vec<(String, Unit)>, Vec<(String, Unit)>, Vec<(String, Unit)>, Vec<(String, f64)>);
    let per: Vec<Result<Found, SynthError>> = utterances
        .par_iter()
        .map(|u| {
            let clip = load_indexed(u, sample_rate)?;
            let track = mfcc(&clip, config)?;
            let rate = sample_rate as f64;
            let len = clip.len();
            let mut records: Vec<&PhoneRecord> = by_utt[u.id.as_str()].clone();
            records.sort_by(|a, b| a.start.total_cmp(&b.start));
            let cuts: Vec<Cut> = records
                .iter()
                .filter(|r| is_speech(&r.phone))
                .map(|r| {
                    let start = ((r.start * rate).round().max(0.0) as usize).min(len);
                    let end = ((r.end * rate).round().max(0.0) as usize).clamp(start, len);
                    Cut {
                        phone: r.phone.clone(),
                        start,
                        mid: (start + end) / 2,
                        end,
                    }
                })
                .collect();
            let unit = |a: usize, b: usize| Unit {
                utterance: u.id.clone(),
                start_sample: a,
                end_sample: b,
                start_frame: frame_at(a, &track, frame_len, hop),
                end_frame: frame_at(b, &track, frame_len, hop),
                start_mfcc: track.frame(frame_at(a, &track, frame_len, hop)).to_vec(),
                end_mfcc: track.frame(frame_at(b, &track, frame_len, hop)).to_vec(),
            };
            let mut found: Found = Default::default();
            for w in cuts.windows(2) {
                if w[1].mid > w[0].mid {
                    found.0.push((diphone_key(&w[0].phone, &w[1].phone), unit(w[0].mid, w[1].mid)));
                }
            }
            if let (Some(first), Some(last)) = (cuts.first(), cuts.last()) {
                if first.mid > 0 {
                    found.1.push((first.phone.clone(), unit(0, first.mid)));
                }
                if len > last.mid {
                    found.2.push((last.phone.clone(), unit(last.mid, len)));
                }
            }
            for c in &cuts {
                if c.mid > c.start {
                    found.3.push((c.phone.clone(), unit(c.start, c.mid)));
                }
                if c.end > c.mid {
                    found.4.push((c.phone.clone(), unit(c.mid, c.end)));
                }
                if c.end > c.start {
                    found.5.push((c.phone.clone(), (c.end - c.start) as f64 / hop as f64));
                }
            }
            Ok(found)
        })
        .collect();

    let mut index = UnitIndex {
        sample_rate,
        hop_samples: hop,
        mfcc: config.clone(),
        utterances,
        diphones: BTreeMap::new(),
        initial: BTreeMap::new(),
        terminal: BTreeMap::new(),
        left_halves: BTreeMap::new(),
        right_halves: BTreeMap::new(),
        duration_means: BTreeMap::new(),
    };
    let mut durations: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for r in per {
        let (di, init, term, left, right, durs) = r?;
        for (map, list) in [
            (&mut index.diphones, di),
            (&mut index.initial, init),
            (&mut index.terminal, term),
            (&mut index.left_halves, left),
            (&mut index.right_halves, right),
        ] {
            for (k, unit) in list {
                map.entry(k).or_default().push(unit);
            }
        }
        for (p, d) in durs {
            let e = durations.entry(p).or_default();
            e.0 += d;
            e.1 += 1;
        }
    }
    index.duration_means = durations.into_iter().map(|(p, (sum, n))| (p, sum / n as f64)).collect();
    Ok(index)
}
