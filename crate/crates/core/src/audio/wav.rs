use std::io::ErrorKind;
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use super::{AudioClip, AudioError};

/// Read a PCM WAV file into a mono clip.
///
/// Integer formats of 8, 16 and 24 bits and 32-bit float are accepted. Stereo
/// input is averaged down to one channel.
pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioClip, AudioError> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(AudioError::NotFound(path.to_path_buf()));
    }
    let reader = WavReader::open(path).map_err(|e| classify(path, e))?;
    let spec = reader.spec();
    if spec.channels == 0 || spec.channels > 2 {
        return Err(AudioError::Unsupported {
            path: path.to_path_buf(),
            reason: format!("{} channels", spec.channels),
        });
    }
    // hound trusts the header length; compare it against what is on disk so a
    // short payload is caught before decoding.
    let expected = reader.len() as u64 * u64::from(spec.bits_per_sample / 8);
    let on_disk = std::fs::metadata(path)?.len();
    if expected > on_disk {
        return Err(AudioError::Truncated(path.to_path_buf()));
    }

    let interleaved: Vec<f32> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Float, 32) => collect(path, reader.into_samples::<f32>(), |s| s)?,
        (SampleFormat::Int, bits @ (8 | 16 | 24 | 32)) => {
            let scale = 1.0 / (1u64 << (bits - 1)) as f32;
            collect(path, reader.into_samples::<i32>(), |s| s as f32 * scale)?
        }
        (format, bits) => {
            return Err(AudioError::Unsupported {
                path: path.to_path_buf(),
                reason: format!("{format:?} at {bits} bits"),
            })
        }
    };

    let samples = if spec.channels == 2 {
        interleaved
            .chunks_exact(2)
            .map(|c| 0.5 * (c[0] + c[1]))
            .collect()
    } else {
        interleaved
    };
    let samples = samples
        .into_iter()
        .map(|s| if s.is_finite() { s.clamp(-1.0, 1.0) } else { 0.0 })
        .collect();
    AudioClip::new(samples, spec.sample_rate)
}

fn collect<T, I>(path: &Path, samples: I, convert: impl Fn(T) -> f32) -> Result<Vec<f32>, AudioError>
where
    I: Iterator<Item = hound::Result<T>>,
{
    samples
        .map(|s| s.map(&convert).map_err(|e| classify(path, e)))
        .collect()
}

fn classify(path: &Path, err: hound::Error) -> AudioError {
    match err {
        hound::Error::IoError(io) if io.kind() == ErrorKind::UnexpectedEof => {
            AudioError::Truncated(path.to_path_buf())
        }
        hound::Error::IoError(io) if io.kind() == ErrorKind::NotFound => {
            AudioError::NotFound(path.to_path_buf())
        }
        hound::Error::IoError(io) => AudioError::Io(io),
        hound::Error::FormatError(reason) => AudioError::Unsupported {
            path: path.to_path_buf(),
            reason: reason.to_string(),
        },
        other => AudioError::Unsupported {
            path: path.to_path_buf(),
            reason: other.to_string(),
        },
    }
}

/// Write a clip as 16-bit mono PCM.
pub fn write_wav(path: impl AsRef<Path>, clip: &AudioClip) -> Result<(), AudioError> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate(),
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut writer = WavWriter::create(path.as_ref(), spec).map_err(|e| match e {
        hound::Error::IoError(io) => AudioError::Io(io),
        other => AudioError::Io(std::io::Error::other(other.to_string())),
    })?;
    for &s in clip.samples() {
        writer
            .write_sample(quantize_i16(s))
            .map_err(|e| AudioError::Io(std::io::Error::other(e.to_string())))?;
    }
    writer
        .finalize()
        .map_err(|e| AudioError::Io(std::io::Error::other(e.to_string())))
}

pub(crate) fn quantize_i16(s: f32) -> i16 {
    (s * 32767.0).round().clamp(-32768.0, 32767.0) as i16
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_int16(path: &Path, channels: u16, rate: u32, frames: &[Vec<i16>]) {
        let spec = WavSpec {
            channels,
            sample_rate: rate,
            bits_per_sample: 16,
            sample_format: SampleFormat::Int,
        };
        let mut w = WavWriter::create(path, spec).unwrap();
        for frame in frames {
            for &s in frame {
                w.write_sample(s).unwrap();
            }
        }
        w.finalize().unwrap();
    }

    #[test]
    fn mono_16k_one_second() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.wav");
        let frames: Vec<Vec<i16>> = (0..16000).map(|i| vec![(i % 100) as i16]).collect();
        write_int16(&path, 1, 16000, &frames);
        let clip = load_wav(&path).unwrap();
        assert_eq!(clip.len(), 16000);
        assert_eq!(clip.sample_rate(), 16000);
        assert!((clip.duration_seconds() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stereo_opposite_channels_average_to_zero() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.wav");
        let frames: Vec<Vec<i16>> = (0..800).map(|_| vec![16384, -16384]).collect();
        write_int16(&path, 2, 8000, &frames);
        let clip = load_wav(&path).unwrap();
        assert_eq!(clip.len(), 800);
        assert!(clip.samples().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn truncated_payload_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.wav");
        let frames: Vec<Vec<i16>> = (0..1000).map(|_| vec![100]).collect();
        write_int16(&path, 1, 16000, &frames);
        let bytes = std::fs::read(&path).unwrap();
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(&bytes[..bytes.len() - 500]).unwrap();
        drop(f);
        assert!(matches!(load_wav(&path), Err(AudioError::Truncated(_))));
    }

    #[test]
    fn missing_and_unsupported_are_distinct() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_wav(dir.path().join("nope.wav")),
            Err(AudioError::NotFound(_))
        ));
        let junk = dir.path().join("junk.wav");
        std::fs::write(&junk, b"ID3\x04\x00not a riff file at all, mp3 maybe").unwrap();
        assert!(matches!(load_wav(&junk), Err(AudioError::Unsupported { .. })));
    }

    #[test]
    fn float_and_24_bit_inputs() {
        let dir = tempfile::tempdir().unwrap();
        let fpath = dir.path().join("f.wav");
        let spec = WavSpec {
            channels: 1,
            sample_rate: 16000,
            bits_per_sample: 32,
            sample_format: SampleFormat::Float,
        };
        let mut w = WavWriter::create(&fpath, spec).unwrap();
        w.write_sample(0.25f32).unwrap();
        w.write_sample(-0.5f32).unwrap();
        w.finalize().unwrap();
        assert_eq!(load_wav(&fpath).unwrap().samples(), &[0.25, -0.5]);

        let ipath = dir.path().join("i24.wav");
        let spec = WavSpec {
            channels: 1,
            sample_rate: 16000,
            bits_per_sample: 24,
            sample_format: SampleFormat::Int,
        };
        let mut w = WavWriter::create(&ipath, spec).unwrap();
        w.write_sample(1i32 << 22).unwrap();
        w.finalize().unwrap();
        assert_eq!(load_wav(&ipath).unwrap().samples(), &[0.5]);
    }

    #[test]
    fn write_then_read_within_quantization() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rt.wav");
        let clip = AudioClip::new(vec![0.0, 0.5, -0.25, 0.999], 16000).unwrap();
        write_wav(&path, &clip).unwrap();
        let back = load_wav(&path).unwrap();
        for (a, b) in clip.samples().iter().zip(back.samples()) {
            assert!((a - b).abs() < 1.0 / 16000.0);
        }
    }
}
