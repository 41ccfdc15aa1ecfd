//! Synthetic chapters with known boundaries.
//!
//! Every letter of a small alphabet is rendered as a fixed pair of
//! sinusoids, so an identity G2P table turns the verse text straight into
//! the phone sequence that was synthesized. Verses are separated by silence
//! and the generator keeps the true phone and verse times.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::aligner::{ChapterAlignment, Verse};
use crate::audio::AudioClip;
use crate::textnorm::{CleanProfile, G2pTable, NormalizedText};

pub const SYNTHETIC_ALPHABET: &str = "aeiklmnostu";

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub sample_rate: u32,
    pub verses: usize,
    /// Inclusive ranges.
    pub words_per_verse: (usize, usize),
    pub letters_per_word: (usize, usize),
    /// Phone duration range in 10 ms frames.
    pub phone_frames: (usize, usize),
    pub pause_ms: (u32, u32),
    pub edge_silence_ms: u32,
    /// White noise at this SNR relative to the speech RMS; `None` is clean.
    pub snr_db: Option<f64>,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            sample_rate: 16000,
            verses: 6,
            words_per_verse: (2, 4),
            letters_per_word: (2, 5),
            phone_frames: (8, 16),
            pause_ms: (150, 400),
            edge_silence_ms: 250,
            snr_db: None,
        }
    }
}

impl SyntheticConfig {
    /// About five minutes of audio.
    pub fn five_minute() -> Self {
        Self {
            verses: 84,
            words_per_verse: (6, 10),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruthPhone {
    pub phone: String,
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticVerse {
    pub id: String,
    pub text: String,
    pub start: f64,
    pub end: f64,
    pub phones: Vec<TruthPhone>,
}

#[derive(Debug, Clone)]
pub struct SyntheticChapter {
    pub audio: AudioClip,
    pub verses: Vec<SyntheticVerse>,
}

/// The two tone frequencies (Hz) used for `letter`.
pub fn tone_signature(letter: char) -> Option<(f64, f64)> {
    let n = SYNTHETIC_ALPHABET.chars().count();
    let i = SYNTHETIC_ALPHABET.chars().position(|c| c == letter)?;
    Some((250.0 + 90.0 * i as f64, 1400.0 + 170.0 * ((i * 7) % n) as f64))
}

impl SyntheticChapter {
    pub fn g2p_table(&self) -> G2pTable {
        G2pTable::identity("synthetic")
    }

    /// `verse_id<TAB>text` lines.
    pub fn verse_file(&self) -> String {
        self.verses.iter().map(|v| format!("{}\t{}\n", v.id, v.text)).collect()
    }

    pub fn aligner_verses(&self) -> Vec<Verse> {
        let table = self.g2p_table();
        self.verses
            .iter()
            .map(|v| Verse {
                id: v.id.clone(),
                text: NormalizedText::new(&v.text, None, &CleanProfile::default(), &table)
                    .expect("generated text has no digits"),
            })
            .collect()
    }

    /// Mean absolute error over all verse start and end times, in units of
    /// `frame_shift_s`. Verses are matched by id.
    pub fn mean_boundary_error_frames(&self, alignment: &ChapterAlignment, frame_shift_s: f64) -> f64 {
        let mut total = 0.0;
        let mut count = 0usize;
        for truth in &self.verses {
            let Some(found) = alignment.utterances.iter().find(|u| u.verse_id == truth.id) else {
                return f64::INFINITY;
            };
            total += (found.start_time - truth.start).abs() + (found.end_time - truth.end).abs();
            count += 2;
        }
        total / frame_shift_s / count.max(1) as f64
    }
}

fn random_text(rng: &mut impl Rng, config: &SyntheticConfig) -> String {
    let letters: Vec<char> = SYNTHETIC_ALPHABET.chars().collect();
    let words = rng.random_range(config.words_per_verse.0..=config.words_per_verse.1);
    let mut out = String::new();
    let mut last = None;
    for w in 0..words {
        if w > 0 {
            out.push(' ');
        }
        let len = rng.random_range(config.letters_per_word.0..=config.letters_per_word.1);
        for _ in 0..len {
            // no letter twice in a row: the boundary between them would be inaudible
            let c = loop {
                let c = letters[rng.random_range(0..letters.len())];
                if Some(c) != last {
                    break c;
                }
            };
            out.push(c);
            last = Some(c);
        }
    }
    out
}

/// Generate a chapter; equal seeds give identical output.
pub fn synthetic_chapter(config: &SyntheticConfig, seed: u64) -> SyntheticChapter {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sr = config.sample_rate as f64;
    let frame = config.sample_rate as usize / 100;
    let ms = |m: u32| (m as usize * config.sample_rate as usize) / 1000;

    let mut samples: Vec<f32> = vec![0.0; ms(config.edge_silence_ms)];
    let mut verses = Vec::with_capacity(config.verses);
    let mut speech_energy = 0.0f64;
    let mut speech_len = 0usize;
    for v in 0..config.verses {
        if v > 0 {
            let pause = rng.random_range(config.pause_ms.0..=config.pause_ms.1);
            samples.resize(samples.len() + ms(pause), 0.0);
        }
        let text = random_text(&mut rng, config);
        let verse_start = samples.len();
        let mut phones = Vec::new();
        for letter in text.chars().filter(|c| !c.is_whitespace()) {
            let (f1, f2) = tone_signature(letter).expect("alphabet letter");
            let len = frame * rng.random_range(config.phone_frames.0..=config.phone_frames.1);
            let start = samples.len();
            for n in 0..len {
                let t = n as f64 / sr;
                let x = 0.3 * (2.0 * std::f64::consts::PI * f1 * t).sin() + 0.3 * (2.0 * std::f64::consts::PI * f2 * t).sin();
                speech_energy += x * x;
                samples.push(x as f32);
            }
            speech_len += len;
            phones.push(TruthPhone {
                phone: letter.to_string(),
                start: start as f64 / sr,
                end: samples.len() as f64 / sr,
            });
        }
        verses.push(SyntheticVerse {
            id: format!("SYN1_{}", v + 1),
            text,
            start: verse_start as f64 / sr,
            end: samples.len() as f64 / sr,
            phones,
        });
    }
    samples.resize(samples.len() + ms(config.edge_silence_ms), 0.0);

    if let Some(snr) = config.snr_db {
        let rms = (speech_energy / speech_len.max(1) as f64).sqrt();
        let noise = Normal::new(0.0, rms / 10f64.powf(snr / 20.0)).expect("finite noise level");
        for s in &mut samples {
            *s = (*s as f64 + noise.sample(&mut rng)).clamp(-1.0, 1.0) as f32;
        }
    }

    SyntheticChapter {
        audio: AudioClip::new(samples, config.sample_rate).expect("finite samples"),
        verses,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aligner::{align_chapter, AlignerConfig};
    use crate::textnorm::g2p;

    #[test]
    fn deterministic_and_consistent() {
        let cfg = SyntheticConfig::default();
        let a = synthetic_chapter(&cfg, 3);
        let b = synthetic_chapter(&cfg, 3);
        assert_eq!(a.audio, b.audio);
        assert_eq!(a.verses, b.verses);
        assert_ne!(synthetic_chapter(&cfg, 4).verses, a.verses);
        for v in &a.verses {
            let phones: Vec<String> = g2p(&v.text, &a.g2p_table()).into_iter().filter(|p| p != "#").collect();
            let truth: Vec<&String> = v.phones.iter().map(|p| &p.phone).collect();
            assert_eq!(phones.iter().collect::<Vec<_>>(), truth);
            assert_eq!(v.phones[0].start, v.start);
            assert_eq!(v.phones.last().unwrap().end, v.end);
        }
        for w in a.verses.windows(2) {
            assert!(w[1].start - w[0].end >= 0.15 - 1e-9);
        }
    }

    #[test]
    fn noise_level_matches_snr() {
        let clean = synthetic_chapter(&SyntheticConfig::default(), 9);
        let noisy = synthetic_chapter(
            &SyntheticConfig {
                snr_db: Some(20.0),
                ..SyntheticConfig::default()
            },
            9,
        );
        let (mut sig, mut err) = (0.0, 0.0);
        for v in &clean.verses {
            let (a, b) = ((v.start * 16000.0) as usize, (v.end * 16000.0) as usize);
            for i in a..b {
                let s = clean.audio.samples()[i] as f64;
                sig += s * s;
                let n = noisy.audio.samples()[i] as f64 - s;
                err += n * n;
            }
        }
        let snr = 10.0 * (sig / err).log10();
        assert!((snr - 20.0).abs() < 0.5, "snr {snr}");
    }

    #[test]
    fn clean_chapter_aligns_within_two_frames() {
        let chapter = synthetic_chapter(&SyntheticConfig::default(), 1);
        let alignment = align_chapter(&chapter.audio, &chapter.aligner_verses(), &AlignerConfig::default()).unwrap();
        let err = chapter.mean_boundary_error_frames(&alignment, 0.01);
        assert!(err <= 2.0, "mean boundary error {err} frames");
    }
}
