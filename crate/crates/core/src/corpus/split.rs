use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CorpusError, Manifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitOrder {
    Corpus,
    Random { seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    /// Strictly increasing targets.
    pub minutes: Vec<f64>,
    pub nested: bool,
    pub order: SplitOrder,
}

impl SplitSpec {
    pub fn new(minutes: Vec<f64>) -> Self {
        Self {
            minutes,
            nested: true,
            order: SplitOrder::Corpus,
        }
    }
}

/// `corpus.tsv` + 25 minutes -> `corpus_25min.tsv`.
pub fn split_file_name(base: &str, minutes: f64) -> String {
    let (stem, ext) = match base.rsplit_once('.') {
        Some((s, e)) if !s.is_empty() => (s, format!(".{e}")),
        _ => (base, String::new()),
    };
    let m = if minutes.fract() == 0.0 {
        format!("{}", minutes as i64)
    } else {
        format!("{minutes}")
    };
    format!("{stem}_{m}min{ext}")
}

fn ordering(n: usize, order: SplitOrder, salt: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    if let SplitOrder::Random { seed } = order {
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed.wrapping_add(salt)));
    }
    idx
}

/// Shortest prefix of `order` whose duration is closest to `target` seconds.
fn closest_prefix(manifest: &Manifest, order: &[usize], target: f64) -> usize {
    let mut best = (0, target.abs());
    let mut total = 0.0;
    for (k, &i) in order.iter().enumerate() {
        total += manifest.utterances[i].duration();
        let miss = (total - target).abs();
        if miss < best.1 {
            best = (k + 1, miss);
        }
    }
    best.0
}

/// Duration-targeted subsets of `manifest`.
///
/// Each split is the prefix (under the chosen order) whose total duration is
/// closest to its target, so it lands within half the longest utterance of
/// it. With `nested` every split extends the previous one; otherwise random
/// orders are drawn independently per target.
pub fn make_splits(manifest: &Manifest, spec: &SplitSpec) -> Result<Vec<Manifest>, CorpusError> {
    if spec.minutes.is_empty() {
        return Err(CorpusError::InfeasibleSplit("no targets".into()));
    }
    if spec.minutes.iter().any(|m| !(m.is_finite() && *m > 0.0)) {
        return Err(CorpusError::InfeasibleSplit("targets must be positive".into()));
    }
    if spec.minutes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CorpusError::InfeasibleSplit("targets must be strictly increasing".into()));
    }
    let total = manifest.total_duration();
    // manifests store times to 10 us; allow that much slack at the top
    let largest = spec.minutes[spec.minutes.len() - 1];
    if largest * 60.0 > total + 1e-3 {
        return Err(CorpusError::InfeasibleSplit(format!(
            "{largest} min requested but the corpus holds {:.2} min",
            total / 60.0
        )));
    }
    let n = manifest.utterances.len();
    let shared = ordering(n, spec.order, 0);
    let mut out = Vec::with_capacity(spec.minutes.len());
    let mut prev = 0;
    for (k, &minutes) in spec.minutes.iter().enumerate() {
        let order = if spec.nested { shared.clone() } else { ordering(n, spec.order, k as u64) };
        let mut take = closest_prefix(manifest, &order, minutes * 60.0);
        if spec.nested {
            take = take.max(prev);
            prev = take;
        }
        out.push(Manifest {
            utterances: order[..take].iter().map(|&i| manifest.utterances[i].clone()).collect(),
            ..manifest.clone()
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Utterance;

    fn corpus(durations: &[f64]) -> Manifest {
        Manifest {
            license: "x".into(),
            utterances: durations
                .iter()
                .enumerate()
                .map(|(i, &d)| Utterance {
                    id: format!("u{i}"),
                    audio: format!("u{i}.wav"),
                    start: 0.0,
                    end: d,
                    speaker: "s".into(),
                    text: "a".into(),
                    score: None,
                })
                .collect(),
            ..Manifest::default()
        }
    }

    #[test]
    fn names() {
        assert_eq!(split_file_name("luo.tsv", 25.0), "luo_25min.tsv");
        assert_eq!(split_file_name("luo", 12.5), "luo_12.5min");
    }

    #[test]
    fn full_duration_is_whole_corpus() {
        let m = corpus(&[60.0; 10]);
        let s = make_splits(&m, &SplitSpec::new(vec![10.0])).unwrap();
        assert_eq!(s[0].utterances.len(), 10);
    }

    #[test]
    fn ties_take_the_shorter_prefix() {
        let m = corpus(&[60.0; 4]);
        let s = make_splits(&m, &SplitSpec::new(vec![1.5])).unwrap();
        assert_eq!(s[0].utterances.len(), 1);
    }

    #[test]
    fn infeasible_targets() {
        let m = corpus(&[60.0; 4]);
        for bad in [vec![5.0], vec![2.0, 1.0], vec![], vec![-1.0]] {
            assert!(matches!(make_splits(&m, &SplitSpec::new(bad)), Err(CorpusError::InfeasibleSplit(_))));
        }
    }
}
