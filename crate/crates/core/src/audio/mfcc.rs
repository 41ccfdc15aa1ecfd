use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{ms_to_samples, AudioClip, AudioError, FeatureTrack};

const LOG_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowType {
    Hann,
    Hamming,
    Rectangular,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MfccConfig {
    /// Cepstral coefficients after c0.
    pub num_coefficients: usize,
    pub include_c0: bool,
    pub num_mel_filters: usize,
    pub frame_length_ms: f64,
    pub frame_shift_ms: f64,
    pub pre_emphasis: f64,
    pub window: WindowType,
    pub min_freq_hz: f64,
    /// `None` means the Nyquist frequency of the input.
    pub max_freq_hz: Option<f64>,
}

impl Default for MfccConfig {
    fn default() -> Self {
        Self {
            num_coefficients: 24,
            include_c0: true,
            num_mel_filters: 26,
            frame_length_ms: 25.0,
            frame_shift_ms: 10.0,
            pre_emphasis: 0.97,
            window: WindowType::Hann,
            min_freq_hz: 0.0,
            max_freq_hz: None,
        }
    }
}

impl MfccConfig {
    pub fn validate(&self) -> Result<(), AudioError> {
        if self.num_coefficients == 0 || self.num_coefficients > self.num_mel_filters {
            return Err(AudioError::Invalid(format!(
                "num_coefficients {} must be in 1..={}",
                self.num_coefficients, self.num_mel_filters
            )));
        }
        if !(self.frame_shift_ms > 0.0 && self.frame_shift_ms <= self.frame_length_ms) {
            return Err(AudioError::Invalid("frame shift must be in (0, frame length]".into()));
        }
        if let Some(max) = self.max_freq_hz {
            if max <= self.min_freq_hz {
                return Err(AudioError::Invalid("max frequency must exceed min frequency".into()));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.num_coefficients + usize::from(self.include_c0)
    }

    pub fn frame_len_samples(&self, sample_rate: u32) -> usize {
        ms_to_samples(self.frame_length_ms, sample_rate).max(1)
    }

    pub fn hop_samples(&self, sample_rate: u32) -> usize {
        ms_to_samples(self.frame_shift_ms, sample_rate).max(1)
    }

    /// `floor((len - frame) / hop) + 1`, or 0 when the clip is shorter than a frame.
    pub fn frame_count(&self, num_samples: usize, sample_rate: u32) -> usize {
        let frame = self.frame_len_samples(sample_rate);
        if num_samples < frame {
            0
        } else {
            (num_samples - frame) / self.hop_samples(sample_rate) + 1
        }
    }
}

/// Mel-frequency cepstral coefficients of a clip.
pub fn mfcc(clip: &AudioClip, config: &MfccConfig) -> Result<FeatureTrack, AudioError> {
    config.validate()?;
    let rate = clip.sample_rate();
    let frame_len = config.frame_len_samples(rate);
    let hop = config.hop_samples(rate);
    if clip.len() < frame_len {
        return Err(AudioError::TooShort {
            samples: clip.len(),
            frame: frame_len,
        });
    }
    let frame_count = config.frame_count(clip.len(), rate);
    let nfft = frame_len.next_power_of_two();

    let emphasized = pre_emphasize(clip.samples(), config.pre_emphasis);
    let window = make_window(config.window, frame_len);
    let nyquist = rate as f64 / 2.0;
    let max_freq = config.max_freq_hz.unwrap_or(nyquist).min(nyquist);
    let filters = mel_filterbank(config.num_mel_filters, nfft, rate, config.min_freq_hz, max_freq);
    let dct = dct_matrix(config.num_mel_filters, config.num_coefficients, config.include_c0);

    let fft = FftPlanner::<f64>::new().plan_fft_forward(nfft);
    let mut buffer = vec![Complex::new(0.0, 0.0); nfft];
    let mut power = vec![0.0; nfft / 2 + 1];
    let mut log_mel = vec![0.0; config.num_mel_filters];
    let mut frames = Vec::with_capacity(frame_count);

    for t in 0..frame_count {
        let start = t * hop;
        for (i, slot) in buffer.iter_mut().enumerate() {
            *slot = if i < frame_len {
                Complex::new(emphasized[start + i] * window[i], 0.0)
            } else {
                Complex::new(0.0, 0.0)
            };
        }
        fft.process(&mut buffer);
        for (p, c) in power.iter_mut().zip(&buffer) {
            *p = c.norm_sqr() / nfft as f64;
        }
        for (out, filter) in log_mel.iter_mut().zip(&filters) {
            let energy: f64 = filter.iter().map(|&(bin, w)| w * power[bin]).sum();
            *out = energy.max(LOG_FLOOR).ln();
        }
        frames.push(
            dct.iter()
                .map(|row| row.iter().zip(&log_mel).map(|(a, b)| a * b).sum())
                .collect(),
        );
    }
    FeatureTrack::new(frames, config.frame_shift_ms, config.frame_length_ms, config.include_c0)
}

fn pre_emphasize(samples: &[f32], coef: f64) -> Vec<f64> {
    let mut prev = 0.0;
    samples
        .iter()
        .map(|&s| {
            let s = s as f64;
            let y = s - coef * prev;
            prev = s;
            y
        })
        .collect()
}

fn make_window(kind: WindowType, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    let denom = (n - 1) as f64;
    (0..n)
        .map(|i| {
            let phase = 2.0 * PI * i as f64 / denom;
            match kind {
                WindowType::Hann => 0.5 - 0.5 * phase.cos(),
                WindowType::Hamming => 0.54 - 0.46 * phase.cos(),
                WindowType::Rectangular => 1.0,
            }
        })
        .collect()
}

fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filters as sparse `(bin, weight)` lists.
fn mel_filterbank(count: usize, nfft: usize, rate: u32, min_hz: f64, max_hz: f64) -> Vec<Vec<(usize, f64)>> {
    let (lo, hi) = (hz_to_mel(min_hz), hz_to_mel(max_hz));
    let edges: Vec<f64> = (0..count + 2)
        .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (count + 1) as f64))
        .collect();
    let bin_hz = rate as f64 / nfft as f64;
    (0..count)
        .map(|m| {
            let (left, center, right) = (edges[m], edges[m + 1], edges[m + 2]);
            (0..=nfft / 2)
                .filter_map(|bin| {
                    let f = bin as f64 * bin_hz;
                    let w = if f > left && f <= center {
                        (f - left) / (center - left)
                    } else if f > center && f < right {
                        (right - f) / (right - center)
                    } else {
                        0.0
                    };
                    (w > 0.0).then_some((bin, w))
                })
                .collect()
        })
        .collect()
}

/// Orthonormal DCT-II rows for the requested coefficient indices.
fn dct_matrix(filters: usize, coefficients: usize, include_c0: bool) -> Vec<Vec<f64>> {
    let first = if include_c0 { 0 } else { 1 };
    let m = filters as f64;
    (first..=coefficients)
        .map(|k| {
            let scale = if k == 0 { (1.0 / m).sqrt() } else { (2.0 / m).sqrt() };
            (0..filters)
                .map(|j| scale * (PI * k as f64 * (j as f64 + 0.5) / m).cos())
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn one_second_gives_98_frames() {
        let clip = AudioClip::new(vec![0.01; 16000], 16000).unwrap();
        let track = mfcc(&clip, &MfccConfig::default()).unwrap();
        assert_eq!(track.frame_count(), 98);
        assert_eq!(track.dim(), 25);
        assert!(track.includes_c0);
    }

    #[test]
    fn deterministic_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s: Vec<f32> = (0..8000).map(|_| rng.random_range(-0.5..0.5)).collect();
        let clip = AudioClip::new(s, 16000).unwrap();
        let a = mfcc(&clip, &MfccConfig::default()).unwrap();
        let b = mfcc(&clip.clone(), &MfccConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn noise_and_tone_differ_in_c1() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let noise: Vec<f32> = (0..16000).map(|_| rng.random_range(-0.3..0.3)).collect();
        let tone: Vec<f32> = (0..16000)
            .map(|i| (0.3 * (2.0 * PI * 200.0 * i as f64 / 16000.0).sin()) as f32)
            .collect();
        let cfg = MfccConfig::default();
        let mean_c1 = |s: Vec<f32>| {
            let t = mfcc(&AudioClip::new(s, 16000).unwrap(), &cfg).unwrap();
            t.frames().iter().map(|f| f[1]).sum::<f64>() / t.frame_count() as f64
        };
        let (n, t) = (mean_c1(noise), mean_c1(tone));
        assert!((n - t).abs() > 1.0, "noise c1 {n}, tone c1 {t}");
    }

    #[test]
    fn shorter_than_a_frame_is_an_error() {
        let clip = AudioClip::new(vec![0.0; 399], 16000).unwrap();
        assert!(matches!(
            mfcc(&clip, &MfccConfig::default()),
            Err(AudioError::TooShort { samples: 399, frame: 400 })
        ));
    }

    #[test]
    fn config_validation() {
        let cfg = MfccConfig {
            num_coefficients: 30,
            ..MfccConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = MfccConfig {
            frame_shift_ms: 30.0,
            ..MfccConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn silence_gives_finite_constant_frames() {
        let clip = AudioClip::new(vec![0.0; 4000], 16000).unwrap();
        let t = mfcc(&clip, &MfccConfig::default()).unwrap();
        assert!(t.frames().windows(2).all(|w| w[0] == w[1]));
    }

    proptest::proptest! {
        #[test]
        fn frame_count_formula(len in 0usize..20000, shift in 5u32..20, extra in 0u32..20, rate in prop_oneof(vec![8000u32, 16000, 22050])) {
            let cfg = MfccConfig {
                frame_shift_ms: shift as f64,
                frame_length_ms: (shift + extra) as f64,
                ..MfccConfig::default()
            };
            let flen = cfg.frame_len_samples(rate);
            let hop = cfg.hop_samples(rate);
            let clip = AudioClip::new(vec![0.05; len], rate).unwrap();
            match mfcc(&clip, &cfg) {
                Ok(track) => {
                    proptest::prop_assert!(len >= flen);
                    proptest::prop_assert_eq!(track.frame_count(), (len - flen) / hop + 1);
                }
                Err(_) => proptest::prop_assert!(len < flen),
            }
        }
    }

    fn prop_oneof(v: Vec<u32>) -> impl proptest::strategy::Strategy<Value = u32> {
        proptest::sample::select(v)
    }
}
