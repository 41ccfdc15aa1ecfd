//! Single-speaker corpus manifests: reading, writing, validation, stats,
//! cutting chapters into utterance files, and duration-based splits.
//!
//! Manifest format, UTF-8, one utterance per line:
//!
//! ```text
//! #language: luo
//! #source: found/open.bible
//! #license: CC-BY-SA-4.0
//! id<TAB>audio<TAB>start<TAB>end<TAB>speaker<TAB>text[<TAB>score]
//! ```
//!
//! Audio paths are relative to the manifest's directory unless absolute.

mod cut;
mod festvox;
mod split;

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cut::{cut_audio, read_phone_file, write_phone_file, CutOptions, CutOutput, PhoneRecord};
pub use festvox::import_festvox;
pub use split::{make_splits, split_file_name, SplitOrder, SplitSpec};

use crate::audio::{load_wav, AudioClip, AudioError};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("utterance {id}: span {start:.3}-{end:.3} s is outside the audio (0-{duration:.3} s)")]
    OutOfRange { id: String, start: f64, end: f64, duration: f64 },
    #[error("infeasible split: {0}")]
    InfeasibleSplit(String),
    #[error("utterance {id}: {source}")]
    UtteranceAudio { id: String, source: AudioError },
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Utterance {
    pub id: String,
    pub audio: String,
    pub start: f64,
    pub end: f64,
    pub speaker: String,
    pub text: String,
    pub score: Option<f64>,
}

impl Utterance {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub language: String,
    pub source: String,
    pub license: String,
    pub utterances: Vec<Utterance>,
}

impl Manifest {
    pub fn total_duration(&self) -> f64 {
        self.utterances.iter().map(Utterance::duration).sum()
    }

    /// Strict read: any malformed line is an error.
    pub fn read(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let parsed = parse(&text);
        if let Some((line, message)) = parsed.malformed.into_iter().next() {
            return Err(CorpusError::Parse {
                path: path.display().to_string(),
                line,
                message,
            });
        }
        Ok(parsed.manifest)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), CorpusError> {
        std::fs::write(path, self.to_string())?;
        Ok(())
    }

    /// Where an utterance's audio lives, given the manifest's own path.
    pub fn resolve_audio(manifest_path: &Path, utt: &Utterance) -> PathBuf {
        let audio = Path::new(&utt.audio);
        if audio.is_absolute() {
            audio.to_path_buf()
        } else {
            manifest_path.parent().unwrap_or(Path::new(".")).join(audio)
        }
    }
}

/// Load the audio span of one utterance.
pub fn load_utterance(manifest_path: &Path, utt: &Utterance) -> Result<AudioClip, CorpusError> {
    let clip = load_wav(Manifest::resolve_audio(manifest_path, utt))?;
    let rate = clip.sample_rate() as f64;
    let a = (utt.start * rate).round() as usize;
    let b = (utt.end * rate).round() as usize;
    // the stored end time is rounded, so allow one sample of overshoot
    if utt.start < 0.0 || b <= a || b > clip.len() + 1 {
        return Err(CorpusError::OutOfRange {
            id: utt.id.clone(),
            start: utt.start,
            end: utt.end,
            duration: clip.duration_seconds(),
        });
    }
    Ok(clip.slice(a, b))
}

fn clean_field(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

impl fmt::Display for Manifest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "#language: {}", clean_field(&self.language))?;
        writeln!(f, "#source: {}", clean_field(&self.source))?;
        writeln!(f, "#license: {}", clean_field(&self.license))?;
        for u in &self.utterances {
            write!(
                f,
                "{}\t{}\t{:.5}\t{:.5}\t{}\t{}",
                clean_field(&u.id),
                clean_field(&u.audio),
                u.start,
                u.end,
                clean_field(&u.speaker),
                clean_field(&u.text)
            )?;
            if let Some(s) = u.score {
                write!(f, "\t{s:.4}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

struct Parsed {
    manifest: Manifest,
    /// 1-based line of each utterance.
    lines: Vec<usize>,
    malformed: Vec<(usize, String)>,
}

fn parse(text: &str) -> Parsed {
    let mut manifest = Manifest::default();
    let mut lines = Vec::new();
    let mut malformed = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('#') {
            if let Some((key, value)) = header.split_once(':') {
                let value = value.trim().to_string();
                match key.trim() {
                    "language" => manifest.language = value,
                    "source" => manifest.source = value,
                    "license" => manifest.license = value,
                    _ => {}
                }
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 6 && cols.len() != 7 {
            malformed.push((line_no, format!("expected 6 or 7 tab-separated fields, found {}", cols.len())));
            continue;
        }
        let num = |s: &str, what: &str| s.trim().parse::<f64>().map_err(|_| format!("{what} {s:?} is not a number"));
        let parsed = (|| {
            Ok::<_, String>(Utterance {
                id: cols[0].trim().to_string(),
                audio: cols[1].trim().to_string(),
                start: num(cols[2], "start")?,
                end: num(cols[3], "end")?,
                speaker: cols[4].trim().to_string(),
                text: cols[5].to_string(),
                score: cols.get(6).map(|s| num(s, "score")).transpose()?,
            })
        })();
        match parsed {
            Ok(u) => {
                manifest.utterances.push(u);
                lines.push(line_no);
            }
            Err(message) => malformed.push((line_no, message)),
        }
    }
    Parsed {
        manifest,
        lines,
        malformed,
    }
}

impl std::str::FromStr for Manifest {
    type Err = CorpusError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let parsed = parse(text);
        match parsed.malformed.into_iter().next() {
            Some((line, message)) => Err(CorpusError::Parse {
                path: "<string>".into(),
                line,
                message,
            }),
            None => Ok(parsed.manifest),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Malformed,
    DuplicateId,
    UnsafeId,
    MissingAudio,
    NonPositiveDuration,
    EmptyText,
    DigitInText,
    MissingLicense,
    BadScore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// 1-based manifest line, when the finding has one.
    pub line: Option<usize>,
    pub id: Option<String>,
    pub kind: ViolationKind,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

fn filesystem_safe(id: &str) -> bool {
    !id.is_empty()
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

/// Validate a manifest file. Only an unreadable file is an error; every
/// problem with its content is a [`Violation`].
pub fn validate(path: impl AsRef<Path>) -> Result<Vec<Violation>, CorpusError> {
    let path = path.as_ref();
    let parsed = parse(&std::fs::read_to_string(path)?);
    let mut out: Vec<Violation> = parsed
        .malformed
        .iter()
        .map(|(line, message)| Violation {
            line: Some(*line),
            id: None,
            kind: ViolationKind::Malformed,
            message: message.clone(),
        })
        .collect();
    out.extend(validate_manifest(&parsed.manifest, &parsed.lines, path));
    out.sort_by_key(|v| v.line.unwrap_or(0));
    Ok(out)
}

/// Content checks. `lines` gives each utterance's line (may be empty);
/// audio paths resolve against `manifest_path`'s directory.
pub fn validate_manifest(manifest: &Manifest, lines: &[usize], manifest_path: &Path) -> Vec<Violation> {
    let mut out = Vec::new();
    if manifest.license.trim().is_empty() {
        out.push(Violation {
            line: None,
            id: None,
            kind: ViolationKind::MissingLicense,
            message: "no #license header".into(),
        });
    }
    let mut seen = HashSet::new();
    for (i, u) in manifest.utterances.iter().enumerate() {
        let line = lines.get(i).copied();
        let mut push = |kind, message: String| {
            out.push(Violation {
                line,
                id: Some(u.id.clone()),
                kind,
                message,
            })
        };
        if !seen.insert(u.id.as_str()) {
            push(ViolationKind::DuplicateId, format!("duplicate id {:?}", u.id));
        }
        if !filesystem_safe(&u.id) {
            push(ViolationKind::UnsafeId, format!("id {:?} is not filesystem-safe", u.id));
        }
        if !Manifest::resolve_audio(manifest_path, u).is_file() {
            push(ViolationKind::MissingAudio, format!("{}: audio file {:?} not found", u.id, u.audio));
        }
        if !(u.end > u.start) || u.start < 0.0 {
            push(
                ViolationKind::NonPositiveDuration,
                format!("{}: start {} end {} is not a positive span", u.id, u.start, u.end),
            );
        }
        if u.text.trim().is_empty() {
            push(ViolationKind::EmptyText, format!("{}: empty text", u.id));
        }
        if u.text.chars().any(|c| c.is_numeric()) {
            push(ViolationKind::DigitInText, format!("{}: text contains digits (numbers not normalized)", u.id));
        }
        if u.score.is_some_and(|s| !s.is_finite()) {
            push(ViolationKind::BadScore, format!("{}: score is not finite", u.id));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub utterances: usize,
    pub total_seconds: f64,
    pub hours: f64,
    /// `None` for an empty manifest.
    pub mean_seconds: Option<f64>,
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mean = self.mean_seconds.map_or("n/a".to_string(), |m| format!("{m:.2}"));
        write!(f, "utterances\t{}\nhours\t{:.2}\nmean_seconds\t{mean}", self.utterances, self.hours)
    }
}

pub fn stats(manifest: &Manifest) -> CorpusStats {
    let n = manifest.utterances.len();
    let total = manifest.total_duration();
    CorpusStats {
        utterances: n,
        total_seconds: total,
        hours: total / 3600.0,
        mean_seconds: (n > 0).then(|| total / n as f64),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn utt(id: &str, start: f64, end: f64) -> Utterance {
        Utterance {
            id: id.into(),
            audio: format!("{id}.wav"),
            start,
            end,
            speaker: "spk".into(),
            text: "kawuono ni".into(),
            score: None,
        }
    }

    #[test]
    fn round_trip() {
        let mut m = Manifest {
            language: "luo".into(),
            source: "found/open.bible".into(),
            license: "CC-BY-SA-4.0".into(),
            utterances: vec![utt("a", 0.0, 1.5), utt("b", 2.25, 3.0)],
        };
        m.utterances[1].score = Some(-12.5);
        let again: Manifest = m.to_string().parse().unwrap();
        assert_eq!(again, m);
        assert!((m.total_duration() - 2.25).abs() < 1e-12);
    }

    #[test]
    fn strict_parse_names_the_line() {
        let err = "#license: x\na\tb\t0\t1\n".parse::<Manifest>().unwrap_err();
        assert!(matches!(err, CorpusError::Parse { line: 2, .. }));
        let err = "a\tb\tzero\t1\ts\tt\n".parse::<Manifest>().unwrap_err();
        assert!(err.to_string().contains("start"));
    }

    #[test]
    fn stats_arithmetic() {
        let m = Manifest {
            utterances: vec![utt("a", 0.0, 30.0), utt("b", 0.0, 30.0)],
            ..Manifest::default()
        };
        let s = stats(&m);
        assert_eq!(s.utterances, 2);
        assert!((s.hours - 0.0167).abs() < 1e-4);
        assert_eq!(s.mean_seconds, Some(30.0));
        let empty = stats(&Manifest::default());
        assert_eq!((empty.utterances, empty.hours, empty.mean_seconds), (0, 0.0, None));
        assert!(empty.to_string().contains("n/a"));
    }

    fn write_wavs(dir: &Path, ids: &[&str]) {
        for id in ids {
            std::fs::write(dir.join(format!("{id}.wav")), b"").unwrap();
        }
    }

    #[test]
    fn validation_findings() {
        let dir = tempfile::tempdir().unwrap();
        write_wavs(dir.path(), &["a", "b"]);
        let p = dir.path().join("m.tsv");
        let good = Manifest {
            language: "luo".into(),
            source: "created".into(),
            license: "CC-BY-4.0".into(),
            utterances: vec![utt("a", 0.0, 1.0), utt("b", 0.0, 2.0)],
        };
        good.write(&p).unwrap();
        assert!(validate(&p).unwrap().is_empty());

        let mut bad = good.clone();
        bad.license.clear();
        bad.utterances[1].id = "a".into();
        bad.utterances[0].text = "higa 3".into();
        bad.utterances.push(utt("c d", 1.0, 1.0));
        std::fs::write(&p, format!("{bad}garbage line\n")).unwrap();
        let found = validate(&p).unwrap();
        let kinds: Vec<_> = found.iter().map(|v| v.kind).collect();
        for k in [
            ViolationKind::MissingLicense,
            ViolationKind::DuplicateId,
            ViolationKind::DigitInText,
            ViolationKind::UnsafeId,
            ViolationKind::MissingAudio,
            ViolationKind::NonPositiveDuration,
            ViolationKind::Malformed,
        ] {
            assert!(kinds.contains(&k), "{k:?} missing from {found:?}");
        }
        let dup = found.iter().find(|v| v.kind == ViolationKind::DuplicateId).unwrap();
        assert!(dup.message.contains("\"a\""));
        assert_eq!(dup.line, Some(5));
        assert!(validate(dir.path().join("nope.tsv")).is_err());
    }
}
