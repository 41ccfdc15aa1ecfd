use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CorpusError, Manifest, Utterance};
use crate::aligner::ChapterAlignment;
use crate::audio::{power_normalize, write_wav, AudioClip, DEFAULT_TARGET_DBFS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CutOptions {
    pub speaker: String,
    pub normalize: bool,
    pub target_dbfs: f64,
    pub language: String,
    pub source: String,
    pub license: String,
}

impl Default for CutOptions {
    fn default() -> Self {
        Self {
            speaker: "spk1".into(),
            normalize: true,
            target_dbfs: DEFAULT_TARGET_DBFS,
            language: String::new(),
            source: String::new(),
            license: String::new(),
        }
    }
}

/// One phone of a cut utterance, times relative to the utterance file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhoneRecord {
    pub utterance: String,
    pub phone: String,
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutOutput {
    pub manifest: Manifest,
    pub phones: Vec<PhoneRecord>,
}

/// Write one 16-bit WAV per aligned utterance into `out_dir` as `<id>.wav`
/// (power-normalized unless disabled). The returned manifest references
/// the new files with start 0.
pub fn cut_audio(
    alignment: &ChapterAlignment,
    audio: &AudioClip,
    out_dir: &Path,
    options: &CutOptions,
) -> Result<CutOutput, CorpusError> {
    std::fs::create_dir_all(out_dir)?;
    let rate = audio.sample_rate() as f64;
    let duration = audio.duration_seconds();
    let half_sample = 0.5 / rate;
    let results: Vec<Result<(Utterance, Vec<PhoneRecord>), CorpusError>> = alignment
        .utterances
        .par_iter()
        .map(|u| {
            let out_of_range = || CorpusError::OutOfRange {
                id: u.verse_id.clone(),
                start: u.start_time,
                end: u.end_time,
                duration,
            };
            if u.start_time < 0.0 || u.end_time > duration + half_sample || u.end_time <= u.start_time {
                return Err(out_of_range());
            }
            let a = (u.start_time * rate).round() as usize;
            let b = ((u.end_time * rate).round() as usize).min(audio.len());
            if b <= a {
                return Err(out_of_range());
            }
            let mut clip = audio.slice(a, b);
            if options.normalize {
                clip = power_normalize(&clip, options.target_dbfs)
                    .map_err(|source| CorpusError::UtteranceAudio {
                        id: u.verse_id.clone(),
                        source,
                    })?
                    .0;
            }
            let file = format!("{}.wav", u.verse_id);
            write_wav(out_dir.join(&file), &clip)?;
            let length = clip.duration_seconds();
            let offset = a as f64 / rate;
            let phones = u
                .phones
                .iter()
                .map(|p| PhoneRecord {
                    utterance: u.verse_id.clone(),
                    phone: p.phone.clone(),
                    start: (p.start_time - offset).clamp(0.0, length),
                    end: (p.end_time - offset).clamp(0.0, length),
                })
                .collect();
            Ok((
                Utterance {
                    id: u.verse_id.clone(),
                    audio: file,
                    start: 0.0,
                    end: length,
                    speaker: options.speaker.clone(),
                    text: u.text.clone(),
                    score: Some(u.score),
                },
                phones,
            ))
        })
        .collect();
    let mut manifest = Manifest {
        language: options.language.clone(),
        source: options.source.clone(),
        license: options.license.clone(),
        utterances: Vec::with_capacity(results.len()),
    };
    let mut phones = Vec::new();
    for r in results {
        let (u, p) = r?;
        manifest.utterances.push(u);
        phones.extend(p);
    }
    Ok(CutOutput { manifest, phones })
}

/// `utterance<TAB>phone<TAB>start<TAB>end` lines.
pub fn write_phone_file(path: impl AsRef<Path>, phones: &[PhoneRecord]) -> Result<(), CorpusError> {
    let mut out = String::from("# utterance\tphone\tstart\tend\n");
    for p in phones {
        out.push_str(&format!("{}\t{}\t{:.5}\t{:.5}\n", p.utterance, p.phone, p.start, p.end));
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_phone_file(path: impl AsRef<Path>) -> Result<Vec<PhoneRecord>, CorpusError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| CorpusError::Parse {
            path: path.display().to_string(),
            line: i + 1,
            message,
        };
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(err(format!("expected 4 fields, found {}", cols.len())));
        }
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| err(format!("{s:?} is not a number")));
        out.push(PhoneRecord {
            utterance: cols[0].to_string(),
            phone: cols[1].to_string(),
            start: num(cols[2])?,
            end: num(cols[3])?,
        });
    }
    Ok(out)
}
