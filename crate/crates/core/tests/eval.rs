use std::collections::{BTreeMap, HashMap};

use fieldvoice_core::audio::{write_wav, AudioClip, FeatureTrack, MfccConfig};
use fieldvoice_core::corpus::{Manifest, Utterance};
use fieldvoice_core::eval::{
    cer, levenshtein, mcd, mcd_significant, mcd_testset, tally_preferences, CerProfile, EvalError, PreferenceChoice,
    PreferenceItem, PreferenceResponse, Winner,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Edit distance by memoized recursion over suffixes.
fn edit_oracle(a: &[char], b: &[char]) -> usize {
    fn go(a: &[char], b: &[char], memo: &mut HashMap<(usize, usize), usize>) -> usize {
        if a.is_empty() {
            return b.len();
        }
        if b.is_empty() {
            return a.len();
        }
        if let Some(&d) = memo.get(&(a.len(), b.len())) {
            return d;
        }
        let d = if a[0] == b[0] {
            go(&a[1..], &b[1..], memo)
        } else {
            1 + go(&a[1..], b, memo).min(go(a, &b[1..], memo)).min(go(&a[1..], &b[1..], memo))
        };
        memo.insert((a.len(), b.len()), d);
        d
    }
    go(a, b, &mut HashMap::new())
}

fn short_text() -> impl Strategy<Value = Vec<char>> {
    // mix a small alphabet (so matches happen) with arbitrary code points
    let c = prop_oneof![3 => prop::sample::select(vec!['a', 'e', 'w', 'u', ' ', 'ɔ', 'é', 'K']), 1 => any::<char>()];
    prop::collection::vec(c, 0..=12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(600))]
    #[test]
    fn levenshtein_matches_recursive_oracle(a in short_text(), b in short_text()) {
        let d = levenshtein(&a, &b);
        prop_assert_eq!(d, edit_oracle(&a, &b));
        prop_assert!(d <= a.len().max(b.len()));
        prop_assert_eq!(d, levenshtein(&b, &a));
    }

    #[test]
    fn cer_is_oracle_distance_over_normalized_reference(a in short_text(), b in short_text(), lenient in any::<bool>()) {
        let profile = if lenient { CerProfile::lenient() } else { CerProfile::strict() };
        let (ra, hb) = (profile.apply(&a.iter().collect::<String>()), profile.apply(&b.iter().collect::<String>()));
        match cer(&a.iter().collect::<String>(), &b.iter().collect::<String>(), &profile) {
            Ok(r) => {
                prop_assert_eq!(r.distance, edit_oracle(&ra, &hb));
                prop_assert_eq!(r.reference_length, ra.len());
                prop_assert!(r.cer >= 0.0);
                prop_assert!((r.cer - r.distance as f64 / ra.len() as f64).abs() < 1e-12);
            }
            Err(e) => {
                prop_assert!(ra.is_empty());
                prop_assert!(matches!(e, EvalError::EmptyReference));
            }
        }
    }
}

#[test]
fn reported_transcription_pairs() {
    let strict = CerProfile::strict();
    for (r, h, d, rate) in [("kawuono ni", "kawuononi", 1, 0.10), ("dwe", "due", 1, 1.0 / 3.0), ("Dwe!", "dwe", 0, 0.0)] {
        let got = cer(r, h, &strict).unwrap();
        assert_eq!(got.distance, d);
        assert_eq!(got.distance, edit_oracle(&strict.apply(r), &strict.apply(h)));
        assert!((got.cer - rate).abs() < 1e-12);
    }
    let lenient = CerProfile::lenient();
    for (r, h) in [("kawuono ni", "kawuononi"), ("dwe", "due"), ("Mbeeri", "Mberi")] {
        assert_eq!(cer(r, h, &lenient).unwrap().distance, 0, "{r} / {h}");
    }
}

fn track(frames: Vec<Vec<f64>>) -> FeatureTrack {
    FeatureTrack::new(frames, 10.0, 25.0, true).unwrap()
}

fn frames(dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-20.0f64..20.0, dim), 1..25)
}

/// Direct evaluation of the per-frame formula.
fn frame_oracle(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for d in 1..a.len() {
        s += (a[d] - b[d]).powi(2);
    }
    10.0 / 10f64.ln() * (2.0 * s).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]
    #[test]
    fn mcd_symmetric_nonnegative_and_zero_on_self(a in frames(25), b in frames(25), align in any::<bool>()) {
        let (ta, tb) = (track(a.clone()), track(b.clone()));
        let ab = mcd(&ta, &tb, align).unwrap();
        let ba = mcd(&tb, &ta, align).unwrap();
        prop_assert!(ab.mean_mcd >= 0.0);
        prop_assert!((ab.mean_mcd - ba.mean_mcd).abs() <= 1e-9 * (1.0 + ab.mean_mcd));
        prop_assert_eq!(mcd(&ta, &ta, align).unwrap().mean_mcd, 0.0);
        if !align {
            let n = a.len().min(b.len());
            let expect = (0..n).map(|i| frame_oracle(&a[i], &b[i])).sum::<f64>() / n as f64;
            prop_assert!((ab.mean_mcd - expect).abs() < 1e-9 * (1.0 + expect));
            prop_assert_eq!(ab.frame_pairs, n);
        }
    }

    #[test]
    fn mcd_scales_with_coefficient_differences(a in frames(25), delta in frames(25), k in 0.1f64..10.0) {
        let n = a.len().min(delta.len());
        let base: Vec<Vec<f64>> = a[..n].to_vec();
        let shifted = |scale: f64| -> Vec<Vec<f64>> {
            base.iter().zip(&delta).map(|(f, d)| f.iter().zip(d).map(|(x, y)| x + scale * y).collect()).collect()
        };
        let one = mcd(&track(base.clone()), &track(shifted(1.0)), false).unwrap().mean_mcd;
        let scaled = mcd(&track(base.clone()), &track(shifted(k)), false).unwrap().mean_mcd;
        prop_assert!((scaled - k * one).abs() <= 1e-8 * (1.0 + k * one));
    }
}

#[test]
fn single_coefficient_unit_difference() {
    let mut b = vec![0.0; 25];
    b[7] = 1.0;
    let r = mcd(&track(vec![vec![0.0; 25]]), &track(vec![b.clone()]), true).unwrap();
    assert!((r.mean_mcd - 6.1419).abs() < 1e-3);
    // a c0 difference alone is not distortion
    let mut c0 = vec![0.0; 25];
    c0[0] = 50.0;
    assert_eq!(mcd(&track(vec![vec![0.0; 25]]), &track(vec![c0]), true).unwrap().mean_mcd, 0.0);
    assert!(mcd_significant(4.73, 4.61));
    assert!(!mcd_significant(4.73, 4.62));
}

#[test]
fn dtw_absorbs_a_time_stretch() {
    let a: Vec<Vec<f64>> = (0..20).map(|i| (0..25).map(|d| ((i * d) as f64 * 0.1).sin()).collect()).collect();
    let stretched: Vec<Vec<f64>> = a.iter().flat_map(|f| [f.clone(), f.clone()]).collect();
    assert_eq!(mcd(&track(a.clone()), &track(stretched.clone()), true).unwrap().mean_mcd, 0.0);
    assert!(mcd(&track(a), &track(stretched), false).unwrap().mean_mcd > 0.0);
}

fn tone(seconds: f64, freq: f64, seed: u64) -> AudioClip {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = (seconds * 16000.0) as usize;
    let samples = (0..n)
        .map(|i| {
            let t = i as f64 / 16000.0;
            (0.3 * (2.0 * std::f64::consts::PI * freq * t).sin() + rng.random_range(-0.01..0.01)) as f32
        })
        .collect();
    AudioClip::new(samples, 16000).unwrap()
}

fn manifest_of(dir: &std::path::Path, name: &str, clips: &[(&str, AudioClip)]) -> std::path::PathBuf {
    let mut m = Manifest {
        language: "luo".into(),
        source: "test".into(),
        license: "CC0".into(),
        utterances: vec![],
    };
    for (id, clip) in clips {
        let file = format!("{name}_{id}.wav");
        write_wav(dir.join(&file), clip).unwrap();
        m.utterances.push(Utterance {
            id: id.to_string(),
            audio: file,
            start: 0.0,
            end: clip.duration_seconds(),
            speaker: "s".into(),
            text: "a".into(),
            score: None,
        });
    }
    let path = dir.join(format!("{name}.tsv"));
    m.write(&path).unwrap();
    path
}

#[test]
fn testset_mcd_weights_by_frames_and_reports_missing_ids() {
    let dir = tempfile::tempdir().unwrap();
    let r = manifest_of(
        dir.path(),
        "ref",
        &[("u1", tone(0.5, 300.0, 1)), ("u2", tone(1.0, 500.0, 2)), ("u3", tone(0.4, 700.0, 3))],
    );
    let same = manifest_of(dir.path(), "copy", &[("u1", tone(0.5, 300.0, 1)), ("u2", tone(1.0, 500.0, 2))]);
    let cfg = MfccConfig::default();
    let res = mcd_testset(&r, &same, &cfg).unwrap();
    assert_eq!(res.mean_mcd, 0.0);
    assert_eq!(res.missing_synthesized, vec!["u3".to_string()]);
    assert!(res.missing_reference.is_empty());

    let other = manifest_of(
        dir.path(),
        "syn",
        &[("u1", tone(0.5, 350.0, 4)), ("u2", tone(1.1, 450.0, 5)), ("extra", tone(0.3, 200.0, 6))],
    );
    let res = mcd_testset(&r, &other, &cfg).unwrap();
    assert_eq!(res.missing_reference, vec!["extra".to_string()]);
    assert_eq!(res.per_utterance.len(), 2);
    let pairs: usize = res.per_utterance.iter().map(|u| u.frame_pairs).sum();
    let weighted: f64 = res.per_utterance.iter().map(|u| u.mcd * u.frame_pairs as f64).sum::<f64>() / pairs as f64;
    assert_eq!(res.frame_pairs, pairs);
    assert!((res.mean_mcd - weighted).abs() < 1e-9);
    assert!(res.mean_mcd > 0.0);

    let none = manifest_of(dir.path(), "none", &[("zzz", tone(0.3, 200.0, 7))]);
    assert!(matches!(mcd_testset(&r, &none, &cfg), Err(EvalError::NoOverlap)));
}

fn ab_items(n: usize) -> Vec<PreferenceItem> {
    (0..n)
        .map(|i| PreferenceItem {
            id: format!("p{i}"),
            systems: ["Found".into(), "Created".into()],
        })
        .collect()
}

/// Responses for one evaluator that realize the given counts, with random
/// presentation order.
fn responses_for(evaluator: &str, found: usize, created: usize, same: usize, rng: &mut ChaCha8Rng) -> Vec<PreferenceResponse> {
    let truth: Vec<Option<usize>> =
        std::iter::repeat_n(Some(0), found).chain(std::iter::repeat_n(Some(1), created)).chain(std::iter::repeat_n(None, same)).collect();
    truth
        .into_iter()
        .enumerate()
        .map(|(i, pick)| {
            let swapped = rng.random_bool(0.5);
            let choice = match pick {
                None => PreferenceChoice::Same,
                Some(sys) => {
                    // presented slot of the preferred system
                    if (sys == 1) == swapped {
                        PreferenceChoice::A
                    } else {
                        PreferenceChoice::B
                    }
                }
            };
            PreferenceResponse {
                evaluator: evaluator.into(),
                item: format!("p{i}"),
                swapped,
                choice,
            }
        })
        .collect()
}

#[test]
fn published_preference_tables_replay() {
    // (language, split, [(found, created, same) per evaluator], best)
    let rows: [(&str, &str, [(usize, usize, usize); 2], &str); 6] = [
        ("luo", "25", [(10, 10, 0), (11, 8, 1)], "Found"),
        ("luo", "50", [(11, 9, 0), (13, 5, 2)], "Found"),
        ("luo", "101", [(7, 13, 0), (6, 11, 3)], "Created"),
        ("suba", "25", [(1, 19, 0), (10, 10, 0)], "Created"),
        ("suba", "50", [(0, 20, 0), (9, 11, 0)], "Created"),
        ("suba", "101", [(3, 17, 0), (0, 20, 0)], "Created"),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for (lang, split, evaluators, best) in rows {
        let items = ab_items(20);
        let mut responses = Vec::new();
        for (k, (f, c, s)) in evaluators.iter().enumerate() {
            responses.extend(responses_for(&format!("Evaluator{}", k + 1), *f, *c, *s, &mut rng));
        }
        let t = tally_preferences(&items, &responses).unwrap();
        assert_eq!(t.winner, Winner::System(best.into()), "{lang} {split}");
        for (row, (f, c, s)) in t.per_evaluator.iter().zip(evaluators) {
            assert_eq!((row.counts["Found"], row.counts["Created"], row.same), (f, c, s), "{lang} {split}");
        }
        assert_eq!(t.counts.values().sum::<usize>() + t.same, responses.len());
    }
    // single-evaluator rows decide on their own
    let t = tally_preferences(&ab_items(20), &responses_for("Evaluator2", 0, 20, 0, &mut rng)).unwrap();
    assert_eq!(t.per_evaluator[0].winner, Winner::System("Created".into()));
    let t = tally_preferences(&ab_items(20), &responses_for("Evaluator1", 10, 10, 0, &mut rng)).unwrap();
    assert_eq!(t.winner, Winner::Tie);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]
    #[test]
    fn tally_recovers_ground_truth_under_any_presentation(
        truths in prop::collection::vec(prop::collection::vec(0u8..3, 1..30), 1..5),
        seed in any::<u64>(),
    ) {
        let n = truths.iter().map(Vec::len).max().unwrap();
        let items = ab_items(n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut responses = Vec::new();
        let mut expected: BTreeMap<&str, usize> = BTreeMap::from([("Found", 0), ("Created", 0)]);
        let mut same = 0;
        for (e, picks) in truths.iter().enumerate() {
            for (i, &p) in picks.iter().enumerate() {
                let swapped = rng.random_bool(0.5);
                let choice = match p {
                    2 => { same += 1; PreferenceChoice::Same }
                    sys => {
                        *expected.get_mut(["Found", "Created"][sys as usize]).unwrap() += 1;
                        if (sys == 1) == swapped { PreferenceChoice::A } else { PreferenceChoice::B }
                    }
                };
                responses.push(PreferenceResponse { evaluator: format!("e{e}"), item: format!("p{i}"), swapped, choice });
            }
        }
        let t = tally_preferences(&items, &responses).unwrap();
        prop_assert_eq!(t.counts["Found"], expected["Found"]);
        prop_assert_eq!(t.counts["Created"], expected["Created"]);
        prop_assert_eq!(t.same, same);
        prop_assert_eq!(t.responses, responses.len());
        let want = match expected["Found"].cmp(&expected["Created"]) {
            std::cmp::Ordering::Greater => Winner::System("Found".into()),
            std::cmp::Ordering::Less => Winner::System("Created".into()),
            std::cmp::Ordering::Equal => Winner::Tie,
        };
        prop_assert_eq!(&t.winner, &want);

        responses.shuffle(&mut rng);
        prop_assert_eq!(tally_preferences(&items, &responses).unwrap(), t);
    }
}
