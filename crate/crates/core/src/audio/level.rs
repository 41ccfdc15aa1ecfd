use super::{ms_to_samples, AudioClip, AudioError};

pub const DEFAULT_TARGET_DBFS: f64 = -26.0;
pub const DEFAULT_VAD_THRESHOLD_DB: f64 = 30.0;
const VAD_SHIFT_MS: f64 = 10.0;
/// Frames whose mean power is below this are never active, whatever the peak.
const ABSOLUTE_FLOOR_DB: f64 = -100.0;
const CLIP_PEAK: f32 = 0.99;

/// Per-frame activity over non-overlapping `frame_shift_ms` frames.
///
/// A trailing partial frame is included. A frame is active iff its
/// log-energy exceeds the loudest frame's by more than `-threshold_db` and
/// is above an absolute floor of -100 dBFS.
pub fn energy_vad(clip: &AudioClip, frame_shift_ms: f64, threshold_db_below_peak: f64) -> Vec<bool> {
    let hop = ms_to_samples(frame_shift_ms, clip.sample_rate()).max(1);
    let n = clip.len().div_ceil(hop);
    frame_activity(clip.samples(), n, hop, hop, threshold_db_below_peak)
}

/// Mean power in dB of `count` frames of `frame_len` samples spaced `hop`
/// apart; empty or all-zero frames give `-inf`.
pub(crate) fn frame_energies_db(samples: &[f32], count: usize, frame_len: usize, hop: usize) -> Vec<f64> {
    (0..count)
        .map(|t| {
            let start = (t * hop).min(samples.len());
            let end = (start + frame_len).min(samples.len());
            let frame = &samples[start..end];
            if frame.is_empty() {
                return f64::NEG_INFINITY;
            }
            let power = frame.iter().map(|&s| (s as f64) * (s as f64)).sum::<f64>() / frame.len() as f64;
            if power > 0.0 {
                10.0 * power.log10()
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect()
}

/// Activity mask for frame energies from [`frame_energies_db`].
pub(crate) fn activity_from_energies(energies: &[f64], threshold_db: f64) -> Vec<bool> {
    let peak = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    energies
        .iter()
        .map(|&e| e > ABSOLUTE_FLOOR_DB && e > peak - threshold_db)
        .collect()
}

/// Activity of `count` frames of `frame_len` samples spaced `hop` apart.
pub(crate) fn frame_activity(
    samples: &[f32],
    count: usize,
    frame_len: usize,
    hop: usize,
    threshold_db: f64,
) -> Vec<bool> {
    activity_from_energies(&frame_energies_db(samples, count, frame_len, hop), threshold_db)
}

/// RMS level in dBFS over the active 10 ms frames, or `None` for silence.
pub fn active_rms_dbfs(clip: &AudioClip) -> Option<f64> {
    let hop = ms_to_samples(VAD_SHIFT_MS, clip.sample_rate()).max(1);
    let mask = energy_vad(clip, VAD_SHIFT_MS, DEFAULT_VAD_THRESHOLD_DB);
    let mut sum = 0.0;
    let mut count = 0usize;
    for (t, _) in mask.iter().enumerate().filter(|(_, &a)| a) {
        let start = t * hop;
        let end = (start + hop).min(clip.len());
        for &s in &clip.samples()[start..end] {
            sum += (s as f64) * (s as f64);
        }
        count += end - start;
    }
    if count == 0 {
        return None;
    }
    Some(10.0 * (sum / count as f64).log10())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizeReport {
    pub gain: f64,
    pub measured_dbfs: f64,
    /// Gain was reduced so the peak stays at 0.99.
    pub clip_limited: bool,
}

/// Scale the clip so that its active-frame RMS sits at `target_level_dbfs`.
pub fn power_normalize(
    clip: &AudioClip,
    target_level_dbfs: f64,
) -> Result<(AudioClip, NormalizeReport), AudioError> {
    let measured = active_rms_dbfs(clip).ok_or(AudioError::Silent)?;
    let mut gain = 10f64.powf((target_level_dbfs - measured) / 20.0);
    let peak = clip.peak() as f64;
    let mut clip_limited = false;
    if peak * gain > CLIP_PEAK as f64 {
        gain = CLIP_PEAK as f64 / peak;
        clip_limited = true;
    }
    let samples = clip
        .samples()
        .iter()
        .map(|&s| ((s as f64) * gain).clamp(-1.0, 1.0) as f32)
        .collect();
    Ok((
        AudioClip::new(samples, clip.sample_rate())?,
        NormalizeReport {
            gain,
            measured_dbfs: measured,
            clip_limited,
        },
    ))
}
