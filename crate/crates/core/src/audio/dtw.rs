use serde::{Deserialize, Serialize};

use super::{AudioError, FeatureTrack};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentPath {
    pub pairs: Vec<(usize, usize)>,
    pub local_costs: Vec<f64>,
    pub total_cost: f64,
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Globally optimal warping path under Euclidean frame distance with steps
/// (1,1), (1,0) and (0,1).
///
/// Ties on backtracking prefer the diagonal, then advancing `a` alone, then
/// advancing `b` alone. `total_cost` is accumulated along the path in order,
/// so it equals the left fold of `local_costs` exactly.
pub fn dtw(a: &FeatureTrack, b: &FeatureTrack) -> Result<AlignmentPath, AudioError> {
    if a.is_empty() || b.is_empty() {
        return Err(AudioError::EmptyTrack);
    }
    if a.dim() != b.dim() {
        return Err(AudioError::DimMismatch(a.dim(), b.dim()));
    }
    let (n, m) = (a.frame_count(), b.frame_count());
    let local = |i: usize, j: usize| euclidean(a.frame(i), b.frame(j));

    let mut acc = vec![f64::INFINITY; n * m];
    let idx = |i: usize, j: usize| i * m + j;
    for i in 0..n {
        for j in 0..m {
            let c = local(i, j);
            let best_prev = if i == 0 && j == 0 {
                0.0
            } else {
                let mut best = f64::INFINITY;
                if i > 0 && j > 0 {
                    best = best.min(acc[idx(i - 1, j - 1)]);
                }
                if i > 0 {
                    best = best.min(acc[idx(i - 1, j)]);
                }
                if j > 0 {
                    best = best.min(acc[idx(i, j - 1)]);
                }
                best
            };
            acc[idx(i, j)] = best_prev + c;
        }
    }

    let mut pairs = vec![(n - 1, m - 1)];
    let (mut i, mut j) = (n - 1, m - 1);
    while i > 0 || j > 0 {
        let candidates = [
            (i > 0 && j > 0).then(|| (i - 1, j - 1)),
            (i > 0).then(|| (i - 1, j)),
            (j > 0).then(|| (i, j - 1)),
        ];
        let mut chosen: Option<(usize, usize)> = None;
        for c in candidates.into_iter().flatten() {
            match chosen {
                Some(best) if acc[idx(best.0, best.1)] <= acc[idx(c.0, c.1)] => {}
                _ => chosen = Some(c),
            }
        }
        (i, j) = chosen.expect("at least one predecessor exists");
        pairs.push((i, j));
    }
    pairs.reverse();
    let local_costs: Vec<f64> = pairs.iter().map(|&(i, j)| local(i, j)).collect();
    Ok(AlignmentPath {
        pairs,
        local_costs,
        total_cost: acc[idx(n - 1, m - 1)],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn track(frames: Vec<Vec<f64>>) -> FeatureTrack {
        FeatureTrack::from_frames(frames).unwrap()
    }

    /// Minimum over every monotone path, costs summed in path order.
    fn brute_force(a: &FeatureTrack, b: &FeatureTrack) -> f64 {
        fn walk(a: &FeatureTrack, b: &FeatureTrack, i: usize, j: usize, acc: f64, best: &mut f64) {
            let acc = acc + euclidean(a.frame(i), b.frame(j));
            if i + 1 == a.frame_count() && j + 1 == b.frame_count() {
                *best = best.min(acc);
                return;
            }
            if i + 1 < a.frame_count() && j + 1 < b.frame_count() {
                walk(a, b, i + 1, j + 1, acc, best);
            }
            if i + 1 < a.frame_count() {
                walk(a, b, i + 1, j, acc, best);
            }
            if j + 1 < b.frame_count() {
                walk(a, b, i, j + 1, acc, best);
            }
        }
        let mut best = f64::INFINITY;
        walk(a, b, 0, 0, 0.0, &mut best);
        best
    }

    #[test]
    fn identical_tracks_take_the_diagonal() {
        let a = track(vec![vec![1.0, 2.0], vec![3.0, 1.0], vec![0.0, 0.0]]);
        let path = dtw(&a, &a).unwrap();
        assert_eq!(path.pairs, vec![(0, 0), (1, 1), (2, 2)]);
        assert_eq!(path.total_cost, 0.0);
    }

    #[test]
    fn repeated_frame_costs_nothing() {
        let a = track(vec![vec![0.0], vec![1.0]]);
        let b = track(vec![vec![0.0], vec![0.0], vec![1.0]]);
        let path = dtw(&a, &b).unwrap();
        assert_eq!(path.total_cost, 0.0);
        assert_eq!(brute_force(&a, &b), 0.0);
        assert_eq!(path.pairs, vec![(0, 0), (0, 1), (1, 2)]);
    }

    #[test]
    fn errors() {
        let a = track(vec![vec![0.0]]);
        let b = track(vec![vec![0.0, 1.0]]);
        assert!(matches!(dtw(&a, &b), Err(AudioError::DimMismatch(1, 2))));
        let empty = track(vec![]);
        assert!(matches!(dtw(&a, &empty), Err(AudioError::EmptyTrack)));
    }

    fn frames(max_len: usize, dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
        prop::collection::vec(prop::collection::vec(-3.0f64..3.0, dim), 1..=max_len)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]

        #[test]
        fn matches_exhaustive_enumeration((a, b) in (1usize..4).prop_flat_map(|d| (frames(6, d), frames(6, d)))) {
            let (a, b) = (track(a), track(b));
            let path = dtw(&a, &b).unwrap();
            prop_assert_eq!(path.total_cost, brute_force(&a, &b));
        }

        #[test]
        fn path_shape_and_symmetry((a, b) in (1usize..4).prop_flat_map(|d| (frames(8, d), frames(8, d)))) {
            let (a, b) = (track(a), track(b));
            let path = dtw(&a, &b).unwrap();
            prop_assert_eq!(path.pairs[0], (0, 0));
            prop_assert_eq!(*path.pairs.last().unwrap(), (a.frame_count() - 1, b.frame_count() - 1));
            for w in path.pairs.windows(2) {
                let step = (w[1].0 - w[0].0, w[1].1 - w[0].1);
                prop_assert!(matches!(step, (0, 1) | (1, 0) | (1, 1)));
            }
            let folded = path.local_costs.iter().fold(0.0, |s, c| s + c);
            prop_assert_eq!(folded, path.total_cost);
            prop_assert_eq!(dtw(&b, &a).unwrap().total_cost, path.total_cost);
            prop_assert_eq!(dtw(&a, &a).unwrap().total_cost, 0.0);
        }
    }
}
