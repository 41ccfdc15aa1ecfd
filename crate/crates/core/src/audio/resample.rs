use std::f64::consts::PI;

use super::{AudioClip, AudioError};

/// Zero crossings of the sinc kernel on each side, at the lower of the two rates.
const HALF_ZERO_CROSSINGS: f64 = 24.0;

/// Band-limited resampling with a Blackman-windowed sinc kernel.
///
/// The output length is `round(len * target / source)`, so duration is kept
/// within half an output sample.
pub fn resample(clip: &AudioClip, target_rate: u32) -> Result<AudioClip, AudioError> {
    if target_rate == 0 {
        return Err(AudioError::Invalid("target rate must be positive".into()));
    }
    let source_rate = clip.sample_rate();
    if source_rate == target_rate {
        return Ok(clip.clone());
    }
    let input = clip.samples();
    let step = source_rate as f64 / target_rate as f64;
    let out_len = (input.len() as f64 / step).round() as usize;
    // cutoff relative to the input Nyquist frequency
    let cutoff = (target_rate as f64 / source_rate as f64).min(1.0);
    let half_width = HALF_ZERO_CROSSINGS / cutoff;

    let out = (0..out_len)
        .map(|n| {
            let t = n as f64 * step;
            let lo = (t - half_width).ceil().max(0.0) as usize;
            let hi = ((t + half_width).floor() as usize).min(input.len().saturating_sub(1));
            let mut acc = 0.0;
            for (k, &x) in input.iter().enumerate().take(hi + 1).skip(lo) {
                let d = t - k as f64;
                acc += x as f64 * cutoff * sinc(cutoff * d) * blackman(d / half_width);
            }
            acc.clamp(-1.0, 1.0) as f32
        })
        .collect();
    AudioClip::new(out, target_rate)
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

/// Blackman window on `[-1, 1]`.
fn blackman(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        return 0.0;
    }
    let phase = PI * (u + 1.0);
    0.42 - 0.5 * phase.cos() + 0.08 * (2.0 * phase).cos()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(freq: f64, rate: u32, n: usize, amp: f64) -> Vec<f32> {
        (0..n)
            .map(|i| (amp * (2.0 * PI * freq * i as f64 / rate as f64).sin()) as f32)
            .collect()
    }

    #[test]
    fn same_rate_is_identity() {
        let clip = AudioClip::new(sine(440.0, 16000, 1000, 0.5), 16000).unwrap();
        assert_eq!(resample(&clip, 16000).unwrap(), clip);
    }

    #[test]
    fn one_second_down_to_8k() {
        let clip = AudioClip::new(vec![0.0; 16000], 16000).unwrap();
        let out = resample(&clip, 8000).unwrap();
        assert_eq!(out.sample_rate(), 8000);
        assert!((out.duration_seconds() - 1.0).abs() <= 1.0 / 8000.0);
    }

    #[test]
    fn downsampled_sine_correlates_with_analytic_sine() {
        let clip = AudioClip::new(sine(100.0, 16000, 16000, 0.8), 16000).unwrap();
        let out = resample(&clip, 8000).unwrap();
        let reference = sine(100.0, 8000, out.len(), 0.8);
        // skip the kernel's edge region
        let margin = 200;
        let a: Vec<f64> = out.samples()[margin..out.len() - margin].iter().map(|&v| v as f64).collect();
        let b: Vec<f64> = reference[margin..reference.len() - margin].iter().map(|&v| v as f64).collect();
        let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(dot / (na * nb) > 0.99, "correlation {}", dot / (na * nb));
    }

    #[test]
    fn upsampling_preserves_duration() {
        for &(src, dst, n) in &[(8000u32, 16000u32, 1234usize), (22050, 16000, 4410), (16000, 44100, 999)] {
            let clip = AudioClip::new(vec![0.1; n], src).unwrap();
            let out = resample(&clip, dst).unwrap();
            assert!((out.duration_seconds() - clip.duration_seconds()).abs() <= 1.0 / dst as f64);
        }
    }

    #[test]
    fn zero_target_rejected() {
        let clip = AudioClip::new(vec![0.0; 10], 16000).unwrap();
        assert!(resample(&clip, 0).is_err());
    }
}
