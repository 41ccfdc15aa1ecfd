//! Frame-synchronous segmentation search.
//!
//! Each phone slot is expanded into `min_duration` states that count the
//! frames spent in it (the last state self-loops), so every segmentation is a
//! path through a left-to-right chain and its cost is accumulated one frame at
//! a time in time order. Optional slots (pauses) can be jumped over at no cost.

use super::model::PhoneModelSet;
use super::{AlignError, Segment, Segmentation};
use crate::audio::FeatureTrack;

/// One position in the phone sequence to align.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhoneSlot {
    pub phone: String,
    pub optional: bool,
}

impl PhoneSlot {
    pub fn required(phone: impl Into<String>) -> Self {
        Self {
            phone: phone.into(),
            optional: false,
        }
    }

    pub fn optional(phone: impl Into<String>) -> Self {
        Self {
            phone: phone.into(),
            optional: true,
        }
    }
}

// backpointer codes
const FROM_SAME_STATE: u8 = 0;
const FROM_PREVIOUS_SLOT: u8 = 1;
const FROM_SKIPPED_SLOT: u8 = 2;
const FROM_SHORTER_DURATION: u8 = 3;

/// 2-bit backpointers, `states` per frame.
struct Backpointers {
    bits: Vec<u8>,
    states: usize,
}

impl Backpointers {
    fn new(frames: usize, states: usize) -> Self {
        Self {
            bits: vec![0; (frames * states).div_ceil(4)],
            states,
        }
    }

    fn set(&mut self, t: usize, s: usize, code: u8) {
        let i = t * self.states + s;
        let shift = (i % 4) * 2;
        self.bits[i / 4] = (self.bits[i / 4] & !(0b11 << shift)) | (code << shift);
    }

    fn get(&self, t: usize, s: usize) -> u8 {
        let i = t * self.states + s;
        (self.bits[i / 4] >> ((i % 4) * 2)) & 0b11
    }
}

fn min_frames(slots: &[PhoneSlot], min_duration: usize) -> usize {
    slots.iter().filter(|s| !s.optional).count() * min_duration
}

/// Minimum-cost monotone segmentation of `features` into `phones`, every
/// segment at least `min_duration_frames` long.
pub fn viterbi_segment(
    features: &FeatureTrack,
    phones: &[String],
    models: &PhoneModelSet,
    min_duration_frames: usize,
) -> Result<Segmentation, AlignError> {
    let slots: Vec<PhoneSlot> = phones.iter().map(PhoneSlot::required).collect();
    viterbi_slots(features, &slots, models, min_duration_frames)
}

/// Same as [`viterbi_segment`] with optional slots. Two optional slots may not
/// be adjacent.
pub fn viterbi_slots(
    features: &FeatureTrack,
    slots: &[PhoneSlot],
    models: &PhoneModelSet,
    min_duration_frames: usize,
) -> Result<Segmentation, AlignError> {
    let frames = features.frame_count();
    let m = min_duration_frames.max(1);
    if slots.is_empty() || slots.iter().all(|s| s.optional) {
        return Err(AlignError::EmptyPhoneSequence);
    }
    if slots.windows(2).any(|w| w[0].optional && w[1].optional) {
        return Err(AlignError::InvalidInput("adjacent optional slots".into()));
    }
    let needed = min_frames(slots, m);
    if frames < needed {
        return Err(AlignError::TooShort { frames, needed });
    }

    // per-frame costs for each distinct phone
    let mut phone_index: Vec<usize> = Vec::with_capacity(slots.len());
    let mut distinct: Vec<&str> = Vec::new();
    for slot in slots {
        let idx = match distinct.iter().position(|p| *p == slot.phone) {
            Some(i) => i,
            None => {
                distinct.push(&slot.phone);
                distinct.len() - 1
            }
        };
        phone_index.push(idx);
    }
    let frame_costs: Vec<Vec<f64>> = distinct
        .iter()
        .map(|p| {
            let g = models.get(p);
            features.frames().iter().map(|x| g.cost(x)).collect()
        })
        .collect();

    let k = slots.len();
    let states = k * m;
    let state = |slot: usize, d: usize| slot * m + d; // d in 0..m
    let mut prev = vec![f64::INFINITY; states];
    let mut cur = vec![f64::INFINITY; states];
    let mut back = Backpointers::new(frames, states);

    prev[state(0, 0)] = frame_costs[phone_index[0]][0];
    if slots[0].optional && k > 1 {
        prev[state(1, 0)] = frame_costs[phone_index[1]][0];
        back.set(0, state(1, 0), FROM_SKIPPED_SLOT);
    }

    for t in 1..frames {
        for slot in 0..k {
            let c = frame_costs[phone_index[slot]][t];
            for d in 0..m {
                let s = state(slot, d);
                let (best, code) = if d == 0 {
                    let mut best = f64::INFINITY;
                    let mut code = FROM_SAME_STATE;
                    if m == 1 {
                        best = prev[s];
                    }
                    if slot >= 1 && prev[state(slot - 1, m - 1)] < best {
                        best = prev[state(slot - 1, m - 1)];
                        code = FROM_PREVIOUS_SLOT;
                    }
                    if slot >= 2 && slots[slot - 1].optional && prev[state(slot - 2, m - 1)] < best {
                        best = prev[state(slot - 2, m - 1)];
                        code = FROM_SKIPPED_SLOT;
                    }
                    (best, code)
                } else if d == m - 1 {
                    // staying keeps the earlier boundary on ties
                    if prev[s] <= prev[s - 1] {
                        (prev[s], FROM_SAME_STATE)
                    } else {
                        (prev[s - 1], FROM_SHORTER_DURATION)
                    }
                } else {
                    (prev[s - 1], FROM_SHORTER_DURATION)
                };
                cur[s] = best + c;
                back.set(t, s, code);
            }
        }
        std::mem::swap(&mut prev, &mut cur);
    }

    let mut end_state = state(k - 1, m - 1);
    if slots[k - 1].optional && k > 1 && prev[state(k - 2, m - 1)] < prev[end_state] {
        end_state = state(k - 2, m - 1);
    }
    let total_cost = prev[end_state];
    if !total_cost.is_finite() {
        return Err(AlignError::TooShort { frames, needed });
    }

    // walk back, recording the slot occupied at every frame
    let mut slot_at = vec![0usize; frames];
    let mut s = end_state;
    for t in (0..frames).rev() {
        slot_at[t] = s / m;
        let code = back.get(t, s);
        if t == 0 {
            break;
        }
        let (slot, d) = (s / m, s % m);
        s = match code {
            FROM_SAME_STATE => s,
            FROM_SHORTER_DURATION => state(slot, d - 1),
            FROM_PREVIOUS_SLOT => state(slot - 1, m - 1),
            _ => state(slot - 2, m - 1),
        };
    }

    let mut segments: Vec<Segment> = Vec::new();
    let mut costs_by_segment = Vec::new();
    for t in 0..frames {
        let slot = slot_at[t];
        let c = frame_costs[phone_index[slot]][t];
        match segments.last_mut() {
            Some(last) if t > 0 && slot_at[t - 1] == slot => {
                last.end = t + 1;
                *costs_by_segment.last_mut().unwrap() += c;
            }
            _ => {
                segments.push(Segment {
                    phone: slots[slot].phone.clone(),
                    start: t,
                    end: t + 1,
                });
                costs_by_segment.push(c);
            }
        }
    }
    let mut seg = Segmentation::from_segments(segments);
    seg.slot_indices = {
        let mut v = Vec::new();
        for t in 0..frames {
            if t == 0 || slot_at[t] != slot_at[t - 1] {
                v.push(slot_at[t]);
            }
        }
        v
    };
    seg.total_cost = total_cost;
    seg.set_segment_costs(&costs_by_segment);
    Ok(seg)
}

/// Cost of an arbitrary segmentation under `models`, accumulated frame by frame.
pub fn segmentation_cost(features: &FeatureTrack, seg: &Segmentation, models: &PhoneModelSet) -> f64 {
    let mut total = 0.0;
    for s in &seg.segments {
        let g = models.get(&s.phone);
        for t in s.start..s.end {
            total += g.cost(features.frame(t));
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aligner::{estimate_models, flat_segment};
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn models(entries: &[(&str, f64, f64)]) -> PhoneModelSet {
        use crate::aligner::model::Gaussian;
        let models: BTreeMap<String, Gaussian> = entries
            .iter()
            .map(|&(p, m, v)| (p.to_string(), Gaussian::new(vec![m], vec![v])))
            .collect();
        PhoneModelSet {
            global: Gaussian::new(vec![0.0], vec![1.0]),
            models,
            floor: 1e-3,
        }
    }

    fn track(values: &[f64]) -> FeatureTrack {
        FeatureTrack::from_frames(values.iter().map(|&v| vec![v]).collect()).unwrap()
    }

    fn phones(p: &[&str]) -> Vec<String> {
        p.iter().map(|s| s.to_string()).collect()
    }

    /// All placements of `k - 1` boundaries with every segment at least `m` long.
    fn brute_force(features: &FeatureTrack, phones: &[String], models: &PhoneModelSet, m: usize) -> Option<(f64, Vec<usize>)> {
        fn rec(
            features: &FeatureTrack,
            phones: &[String],
            models: &PhoneModelSet,
            m: usize,
            start: usize,
            k: usize,
            bounds: &mut Vec<usize>,
            best: &mut Option<(f64, Vec<usize>)>,
        ) {
            let n = features.frame_count();
            if k + 1 == phones.len() {
                if n - start < m {
                    return;
                }
                bounds.push(n);
                // left fold over frames in time order
                let mut total = 0.0;
                let mut s = 0;
                for (i, &e) in bounds.iter().enumerate() {
                    let g = models.get(&phones[i]);
                    for t in s..e {
                        total += g.cost(features.frame(t));
                    }
                    s = e;
                }
                if best.as_ref().is_none_or(|(c, _)| total < *c) {
                    *best = Some((total, bounds.clone()));
                }
                bounds.pop();
                return;
            }
            for end in start + m..=n {
                bounds.push(end);
                rec(features, phones, models, m, end, k + 1, bounds, best);
                bounds.pop();
            }
        }
        let mut best = None;
        rec(features, phones, models, m, 0, 0, &mut Vec::new(), &mut best);
        best
    }

    #[test]
    fn single_phone_takes_everything() {
        let seg = viterbi_segment(&track(&[1.0, 2.0, 3.0, 4.0]), &phones(&["a"]), &models(&[("a", 0.0, 1.0)]), 3).unwrap();
        assert_eq!(seg.segments.len(), 1);
        assert_eq!((seg.segments[0].start, seg.segments[0].end), (0, 4));
    }

    #[test]
    fn boundary_at_region_change() {
        let values: Vec<f64> = (0..12).map(|t| if t < 7 { 0.0 } else { 5.0 }).collect();
        let ms = models(&[("A", 0.0, 0.5), ("B", 5.0, 0.5)]);
        let seg = viterbi_segment(&track(&values), &phones(&["A", "B"]), &ms, 3).unwrap();
        assert_eq!(seg.segments[0].end, 7);
        let (cost, bounds) = brute_force(&track(&values), &phones(&["A", "B"]), &ms, 3).unwrap();
        assert_eq!(bounds, vec![7, 12]);
        assert_eq!(cost, seg.total_cost);
    }

    #[test]
    fn infeasible_length() {
        let err = viterbi_segment(&track(&[0.0; 5]), &phones(&["a", "b"]), &models(&[]), 3).unwrap_err();
        assert!(matches!(err, AlignError::TooShort { frames: 5, needed: 6 }));
    }

    #[test]
    fn optional_pause_is_used_or_skipped() {
        let ms = models(&[("a", 0.0, 0.1), ("sil", -10.0, 0.1), ("b", 4.0, 0.1)]);
        let slots = [PhoneSlot::required("a"), PhoneSlot::optional("sil"), PhoneSlot::required("b")];
        let with_gap = track(&[0.0, 0.0, 0.0, -10.0, -10.0, -10.0, 4.0, 4.0, 4.0]);
        let seg = viterbi_slots(&with_gap, &slots, &ms, 3).unwrap();
        assert_eq!(seg.segments.iter().map(|s| s.phone.as_str()).collect::<Vec<_>>(), ["a", "sil", "b"]);
        let no_gap = track(&[0.0, 0.0, 0.0, 4.0, 4.0, 4.0]);
        let seg = viterbi_slots(&no_gap, &slots, &ms, 3).unwrap();
        assert_eq!(seg.segments.iter().map(|s| s.phone.as_str()).collect::<Vec<_>>(), ["a", "b"]);
        assert_eq!(seg.slot_indices, vec![0, 2]);
        // leading and trailing optional slots
        let slots = [PhoneSlot::optional("sil"), PhoneSlot::required("a"), PhoneSlot::optional("sil")];
        let seg = viterbi_slots(&track(&[0.0; 4]), &slots, &ms, 3).unwrap();
        assert_eq!(seg.segments.len(), 1);
        assert_eq!(seg.segments[0].phone, "a");
    }

    #[test]
    fn beats_flat_start_under_same_models() {
        let values: Vec<f64> = (0..30).map(|t| ((t * 7) % 5) as f64 + if t > 18 { 3.0 } else { 0.0 }).collect();
        let f = track(&values);
        let ph = phones(&["a", "b", "a", "c"]);
        let flat = flat_segment(&ph, 30, 3).unwrap();
        let ms = estimate_models(&f, &flat, 1e-3);
        let best = viterbi_segment(&f, &ph, &ms, 3).unwrap();
        assert!(best.total_cost <= segmentation_cost(&f, &flat, &ms));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn matches_exhaustive_enumeration(
            values in prop::collection::vec(-3.0f64..3.0, 1..=12),
            seq in prop::collection::vec(0usize..3, 1..=4),
            min_dur in 1usize..=3,
        ) {
            let f = track(&values);
            let names = ["a", "b", "c"];
            let ph: Vec<String> = seq.iter().map(|&i| names[i].to_string()).collect();
            let ms = models(&[("a", -1.0, 0.5), ("b", 0.5, 2.0), ("c", 2.0, 0.8)]);
            let oracle = brute_force(&f, &ph, &ms, min_dur);
            match viterbi_segment(&f, &ph, &ms, min_dur) {
                Ok(seg) => {
                    let (cost, _) = oracle.expect("oracle found no feasible segmentation");
                    prop_assert_eq!(seg.total_cost, cost);
                    prop_assert_eq!(seg.segments.len(), ph.len());
                    prop_assert!(seg.segments.iter().all(|s| s.end - s.start >= min_dur));
                    prop_assert_eq!(seg.segments.last().unwrap().end, values.len());
                    prop_assert_eq!(segmentation_cost(&f, &seg, &ms), seg.total_cost);
                }
                Err(_) => prop_assert!(oracle.is_none()),
            }
        }
    }
}
