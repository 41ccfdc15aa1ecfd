use std::collections::BTreeSet;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::audio::{dtw, mfcc, resample, AudioError, FeatureTrack, MfccConfig};
use crate::corpus::{load_utterance, Manifest};

/// Smallest MCD difference (dB) treated as audible.
pub const MCD_SIGNIFICANCE_DB: f64 = 0.12;

/// `10 / ln 10`.
const DB: f64 = 10.0 / std::f64::consts::LN_10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceMcd {
    pub id: String,
    pub mcd: f64,
    pub frame_pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McdResult {
    /// Frame-pair weighted mean, dB.
    pub mean_mcd: f64,
    pub frame_pairs: usize,
    pub per_utterance: Vec<UtteranceMcd>,
    pub aligned: bool,
    /// Ids present only in the reference / only in the synthesized set.
    pub missing_synthesized: Vec<String>,
    pub missing_reference: Vec<String>,
}

/// Whether two systems' MCDs differ by at least [`MCD_SIGNIFICANCE_DB`].
/// A 1e-9 slack absorbs rounding in the subtraction.
pub fn mcd_significant(a: f64, b: f64) -> bool {
    (a - b).abs() >= MCD_SIGNIFICANCE_DB - 1e-9
}

fn cepstra(track: &FeatureTrack) -> FeatureTrack {
    if track.includes_c0 {
        track.select_dims(1..track.dim())
    } else {
        track.clone()
    }
}

fn frame_mcd(a: &[f64], b: &[f64]) -> f64 {
    let sum: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    DB * (2.0 * sum).sqrt()
}

/// Sum of per-pair MCD and the pair count.
fn mcd_sum(a: &FeatureTrack, b: &FeatureTrack, align: bool) -> Result<(f64, usize), EvalError> {
    if a.is_empty() || b.is_empty() {
        return Err(EvalError::EmptyTrack);
    }
    if a.dim() != b.dim() || a.includes_c0 != b.includes_c0 {
        return Err(EvalError::DimMismatch(a.dim(), b.dim()));
    }
    let (a, b) = (cepstra(a), cepstra(b));
    if align {
        let path = dtw(&a, &b).map_err(|e| match e {
            AudioError::EmptyTrack => EvalError::EmptyTrack,
            other => EvalError::Audio(other),
        })?;
        let sum = path.pairs.iter().map(|&(i, j)| frame_mcd(a.frame(i), b.frame(j))).sum();
        Ok((sum, path.pairs.len()))
    } else {
        let n = a.frame_count().min(b.frame_count());
        Ok(((0..n).map(|i| frame_mcd(a.frame(i), b.frame(i))).sum(), n))
    }
}

/// Mean mel cepstral distortion in dB between two tracks, c0 excluded.
/// With `align` frames are paired along the DTW path, otherwise index-wise
/// over the shorter track.
pub fn mcd(a: &FeatureTrack, b: &FeatureTrack, align: bool) -> Result<McdResult, EvalError> {
    let (sum, pairs) = mcd_sum(a, b, align)?;
    let mean = sum / pairs as f64;
    Ok(McdResult {
        mean_mcd: mean,
        frame_pairs: pairs,
        per_utterance: vec![],
        aligned: align,
        missing_synthesized: vec![],
        missing_reference: vec![],
    })
}

/// DTW-aligned MCD for every utterance id found in both manifests.
pub fn mcd_testset(
    reference: &Path,
    synthesized: &Path,
    config: &MfccConfig,
) -> Result<McdResult, EvalError> {
    let ref_m = Manifest::read(reference)?;
    let syn_m = Manifest::read(synthesized)?;
    let ref_ids: BTreeSet<&str> = ref_m.utterances.iter().map(|u| u.id.as_str()).collect();
    let syn_ids: BTreeSet<&str> = syn_m.utterances.iter().map(|u| u.id.as_str()).collect();
    let common: Vec<&str> = ref_ids.intersection(&syn_ids).copied().collect();
    if common.is_empty() {
        return Err(EvalError::NoOverlap);
    }
    let per: Vec<Result<(UtteranceMcd, f64), EvalError>> = common
        .par_iter()
        .map(|id| {
            let r = ref_m.utterances.iter().find(|u| u.id == *id).expect("id from this manifest");
            let s = syn_m.utterances.iter().find(|u| u.id == *id).expect("id from this manifest");
            let wrap = |source| EvalError::Utterance {
                id: id.to_string(),
                source,
            };
            let ra = load_utterance(reference, r).map_err(|e| match e {
                crate::corpus::CorpusError::Audio(a) => wrap(a),
                other => EvalError::Corpus(other),
            })?;
            let mut sa = load_utterance(synthesized, s).map_err(|e| match e {
                crate::corpus::CorpusError::Audio(a) => wrap(a),
                other => EvalError::Corpus(other),
            })?;
            if sa.sample_rate() != ra.sample_rate() {
                sa = resample(&sa, ra.sample_rate()).map_err(wrap)?;
            }
            let fa = mfcc(&ra, config).map_err(wrap)?;
            let fb = mfcc(&sa, config).map_err(wrap)?;
            let (sum, pairs) = mcd_sum(&fa, &fb, true)?;
            Ok((
                UtteranceMcd {
                    id: id.to_string(),
                    mcd: sum / pairs as f64,
                    frame_pairs: pairs,
                },
                sum,
            ))
        })
        .collect();
    let mut per_utterance = Vec::with_capacity(per.len());
    let (mut total, mut pairs) = (0.0, 0usize);
    for p in per {
        let (u, sum) = p?;
        total += sum;
        pairs += u.frame_pairs;
        per_utterance.push(u);
    }
    Ok(McdResult {
        mean_mcd: total / pairs as f64,
        frame_pairs: pairs,
        per_utterance,
        aligned: true,
        missing_synthesized: ref_ids.difference(&syn_ids).map(|s| s.to_string()).collect(),
        missing_reference: syn_ids.difference(&ref_ids).map(|s| s.to_string()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn track(frames: Vec<Vec<f64>>) -> FeatureTrack {
        FeatureTrack::new(frames, 10.0, 25.0, true).unwrap()
    }

    #[test]
    fn identical_is_zero() {
        let a = track(vec![vec![3.0, 1.0, -2.0], vec![1.0, 0.5, 0.25]]);
        assert_eq!(mcd(&a, &a, true).unwrap().mean_mcd, 0.0);
        assert_eq!(mcd(&a, &a, false).unwrap().mean_mcd, 0.0);
    }

    #[test]
    fn one_coefficient_off_by_one() {
        let mut f = vec![0.0; 25];
        let a = track(vec![f.clone()]);
        f[5] = 1.0;
        let b = track(vec![f]);
        let expected = 10.0 / 10f64.ln() * 2f64.sqrt();
        let got = mcd(&a, &b, true).unwrap().mean_mcd;
        assert!((got - 6.1419).abs() < 1e-3 && (got - expected).abs() < 1e-12, "{got}");
    }

    #[test]
    fn c0_is_ignored() {
        let a = track(vec![vec![0.0, 1.0]]);
        let b = track(vec![vec![50.0, 1.0]]);
        assert_eq!(mcd(&a, &b, true).unwrap().mean_mcd, 0.0);
    }

    #[test]
    fn significance_threshold() {
        assert!(mcd_significant(4.85, 4.73));
        assert!(mcd_significant(4.73, 4.85));
        assert!(mcd_significant(5.0, 5.12));
        assert!(!mcd_significant(5.0, 5.1199));
        assert!(!mcd_significant(4.73, 4.73));
    }

    #[test]
    fn errors() {
        let a = track(vec![vec![0.0, 1.0]]);
        let b = track(vec![vec![0.0, 1.0, 2.0]]);
        assert!(matches!(mcd(&a, &b, true), Err(EvalError::DimMismatch(2, 3))));
        let empty = FeatureTrack::new(vec![], 10.0, 25.0, true).unwrap();
        assert!(matches!(mcd(&a, &empty, true), Err(EvalError::EmptyTrack)));
    }
}
