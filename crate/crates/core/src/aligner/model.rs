use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::Segmentation;
use crate::audio::FeatureTrack;

pub const DEFAULT_VARIANCE_FLOOR: f64 = 1e-3;

/// Diagonal Gaussian over feature space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    /// `sum_d ln(2 pi var_d)`, cached.
    log_norm: f64,
}

impl Gaussian {
    pub fn new(mean: Vec<f64>, variance: Vec<f64>) -> Self {
        let log_norm = variance.iter().map(|v| (2.0 * PI * v).ln()).sum();
        Self {
            mean,
            variance,
            log_norm,
        }
    }

    /// Negative log-likelihood of one frame.
    pub fn cost(&self, x: &[f64]) -> f64 {
        let mahalanobis: f64 = x
            .iter()
            .zip(&self.mean)
            .zip(&self.variance)
            .map(|((x, m), v)| (x - m) * (x - m) / v)
            .sum();
        0.5 * (self.log_norm + mahalanobis)
    }
}

/// Running first and second moments for one phone.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhoneStats {
    pub count: usize,
    pub sum: Vec<f64>,
    pub sum_sq: Vec<f64>,
}

impl PhoneStats {
    pub fn add(&mut self, x: &[f64]) {
        if self.sum.is_empty() {
            self.sum = vec![0.0; x.len()];
            self.sum_sq = vec![0.0; x.len()];
        }
        for ((s, q), v) in self.sum.iter_mut().zip(self.sum_sq.iter_mut()).zip(x) {
            *s += v;
            *q += v * v;
        }
        self.count += 1;
    }

    pub fn merge(&mut self, other: &PhoneStats) {
        if other.count == 0 {
            return;
        }
        if self.sum.is_empty() {
            *self = other.clone();
            return;
        }
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.sum_sq.iter_mut().zip(&other.sum_sq) {
            *a += b;
        }
        self.count += other.count;
    }

    fn to_gaussian(&self, floor: f64) -> Gaussian {
        let n = self.count as f64;
        let mean: Vec<f64> = self.sum.iter().map(|s| s / n).collect();
        let variance = self
            .sum_sq
            .iter()
            .zip(&mean)
            .map(|(q, m)| (q / n - m * m).max(floor))
            .collect();
        Gaussian::new(mean, variance)
    }
}

/// One Gaussian per phone, with a global fallback for unseen phones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhoneModelSet {
    pub models: BTreeMap<String, Gaussian>,
    pub global: Gaussian,
    pub floor: f64,
}

impl PhoneModelSet {
    pub fn get(&self, phone: &str) -> &Gaussian {
        self.models.get(phone).unwrap_or(&self.global)
    }

    pub fn inventory(&self) -> impl Iterator<Item = &str> {
        self.models.keys().map(String::as_str)
    }

    /// Models from per-phone statistics pooled over any number of tracks.
    pub fn from_stats(stats: &BTreeMap<String, PhoneStats>, floor: f64) -> Self {
        let mut global = PhoneStats::default();
        for s in stats.values() {
            global.merge(s);
        }
        let models = stats
            .iter()
            .filter(|(_, s)| s.count > 0)
            .map(|(p, s)| (p.clone(), s.to_gaussian(floor)))
            .collect();
        let global = if global.count > 0 {
            global.to_gaussian(floor)
        } else {
            Gaussian::new(Vec::new(), Vec::new())
        };
        Self { models, global, floor }
    }
}

/// Accumulate per-phone statistics of the frames each segment covers.
pub fn accumulate_stats(features: &FeatureTrack, seg: &Segmentation, into: &mut BTreeMap<String, PhoneStats>) {
    for s in &seg.segments {
        let stats = into.entry(s.phone.clone()).or_default();
        for t in s.start..s.end {
            stats.add(features.frame(t));
        }
    }
}

/// Per-phone mean and floored variance, pooled across all occurrences.
pub fn estimate_models(features: &FeatureTrack, seg: &Segmentation, variance_floor: f64) -> PhoneModelSet {
    let mut stats = BTreeMap::new();
    accumulate_stats(features, seg, &mut stats);
    PhoneModelSet::from_stats(&stats, variance_floor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aligner::{Segment, Segmentation};
    use proptest::prelude::*;

    fn seg(parts: &[(&str, usize, usize)]) -> Segmentation {
        Segmentation::from_segments(
            parts
                .iter()
                .map(|&(p, s, e)| Segment {
                    phone: p.into(),
                    start: s,
                    end: e,
                })
                .collect(),
        )
    }

    #[test]
    fn constant_frames_get_floored_variance() {
        let track = FeatureTrack::from_frames(vec![vec![1.5, -2.0]; 4]).unwrap();
        let models = estimate_models(&track, &seg(&[("a", 0, 4)]), 1e-3);
        let g = models.get("a");
        assert_eq!(g.mean, vec![1.5, -2.0]);
        assert_eq!(g.variance, vec![1e-3, 1e-3]);
    }

    #[test]
    fn two_occurrences_pool_to_the_mean() {
        let track = FeatureTrack::from_frames(vec![vec![1.0], vec![9.0], vec![3.0]]).unwrap();
        let models = estimate_models(&track, &seg(&[("a", 0, 1), ("b", 1, 2), ("a", 2, 3)]), 1e-3);
        assert_eq!(models.get("a").mean, vec![2.0]);
        assert_eq!(models.get("a").variance, vec![1.0]);
        // unseen phones fall back to the global model
        assert_eq!(models.get("zz"), &models.global);
        assert!((models.global.mean[0] - 13.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn cost_matches_closed_form() {
        let g = Gaussian::new(vec![0.0], vec![1.0]);
        let expected = 0.5 * (2.0 * PI).ln() + 0.5;
        assert!((g.cost(&[1.0]) - expected).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn means_match_direct_accumulation(
            values in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), 6..30),
            cuts in prop::collection::vec(0usize..3, 6..30),
        ) {
            let n = values.len().min(cuts.len());
            let track = FeatureTrack::from_frames(values[..n].to_vec()).unwrap();
            // one frame per segment, phone chosen by `cuts`
            let names = ["a", "b", "c"];
            let parts: Vec<(&str, usize, usize)> = (0..n).map(|t| (names[cuts[t]], t, t + 1)).collect();
            let models = estimate_models(&track, &seg(&parts), 1e-3);
            for (k, name) in names.iter().enumerate() {
                let frames: Vec<&Vec<f64>> = (0..n).filter(|&t| cuts[t] == k).map(|t| &values[t]).collect();
                if frames.is_empty() {
                    prop_assert!(!models.models.contains_key(*name));
                    continue;
                }
                for d in 0..2 {
                    let mean = frames.iter().map(|f| f[d]).sum::<f64>() / frames.len() as f64;
                    let var = frames.iter().map(|f| (f[d] - mean).powi(2)).sum::<f64>() / frames.len() as f64;
                    prop_assert!((models.get(name).mean[d] - mean).abs() < 1e-9);
                    prop_assert!((models.get(name).variance[d] - var.max(1e-3)).abs() < 1e-9);
                }
            }
        }
    }
}
