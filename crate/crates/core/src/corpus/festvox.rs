use std::path::Path;

use super::{CorpusError, Manifest, Utterance};
use crate::audio::AudioError;

/// Build a manifest from a Festvox-style prompt file (`( id "text" )` per
/// line) and a directory of `<id>.wav` files. Durations come from the WAV
/// headers; no audio is decoded.
pub fn import_festvox(prompts: &Path, wav_dir: &Path, speaker: &str) -> Result<Manifest, CorpusError> {
    let text = std::fs::read_to_string(prompts)?;
    let mut manifest = Manifest::default();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: &str| CorpusError::Parse {
            path: prompts.display().to_string(),
            line: i + 1,
            message: message.into(),
        };
        let body = line
            .strip_prefix('(')
            .and_then(|l| l.strip_suffix(')'))
            .ok_or_else(|| err("expected ( id \"text\" )"))?
            .trim();
        let (id, rest) = body.split_once(char::is_whitespace).ok_or_else(|| err("missing text"))?;
        let quoted = rest.trim();
        let text = quoted
            .strip_prefix('"')
            .and_then(|q| q.strip_suffix('"'))
            .ok_or_else(|| err("text must be double-quoted"))?;
        let wav = wav_dir.join(format!("{id}.wav"));
        let reader = hound::WavReader::open(&wav).map_err(|e| match e {
            hound::Error::IoError(io) if io.kind() == std::io::ErrorKind::NotFound => {
                CorpusError::Audio(AudioError::NotFound(wav.clone()))
            }
            other => CorpusError::Audio(AudioError::Unsupported {
                path: wav.clone(),
                reason: other.to_string(),
            }),
        })?;
        let seconds = reader.duration() as f64 / reader.spec().sample_rate as f64;
        manifest.utterances.push(Utterance {
            id: id.to_string(),
            audio: wav.display().to_string(),
            start: 0.0,
            end: seconds,
            speaker: speaker.to_string(),
            text: text.replace("\\\"", "\""),
            score: None,
        });
    }
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::{write_wav, AudioClip};

    #[test]
    fn reads_prompts_and_durations() {
        let dir = tempfile::tempdir().unwrap();
        write_wav(dir.path().join("a_1.wav"), &AudioClip::new(vec![0.0; 8000], 16000).unwrap()).unwrap();
        write_wav(dir.path().join("a_2.wav"), &AudioClip::new(vec![0.0; 24000], 16000).unwrap()).unwrap();
        let prompts = dir.path().join("txt.done.data");
        std::fs::write(&prompts, "( a_1 \"kawuono ni\" )\n( a_2 \"dwe\" )\n").unwrap();
        let m = import_festvox(&prompts, dir.path(), "s").unwrap();
        assert_eq!(m.utterances.len(), 2);
        assert_eq!(m.utterances[0].text, "kawuono ni");
        assert!((m.total_duration() - 2.0).abs() < 1e-12);
        std::fs::write(&prompts, "( a_3 \"x\" )\n").unwrap();
        assert!(matches!(import_festvox(&prompts, dir.path(), "s"), Err(CorpusError::Audio(AudioError::NotFound(_)))));
        std::fs::write(&prompts, "a_1 kawuono\n").unwrap();
        assert!(matches!(import_festvox(&prompts, dir.path(), "s"), Err(CorpusError::Parse { line: 1, .. })));
    }
}
