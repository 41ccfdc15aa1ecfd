use serde::{Deserialize, Serialize};

use super::index::diphone_key;
use super::{SynthError, SynthWeights, Unit, UnitIndex};
use crate::textnorm::WORD_BOUNDARY;

/// Candidates kept per target position, best target cost first.
const MAX_CANDIDATES: usize = 48;
/// Half units kept per side when building backoff pairs.
const MAX_HALVES: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanStep {
    /// `#-a`, `a-b` or `b-#`.
    pub target: String,
    /// One unit, or two half units on backoff.
    pub units: Vec<Unit>,
    pub backoff: bool,
    /// Weighted target cost, plus the inner join of a backoff pair.
    pub target_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthPlan {
    pub phones: Vec<String>,
    pub steps: Vec<PlanStep>,
    /// Weighted join cost between step `i` and `i + 1`.
    pub join_costs: Vec<f64>,
    pub total_cost: f64,
}

/// Target positions for a phone string: an initial edge, one diphone per
/// adjacent pair, and a final edge.
pub fn target_labels(phones: &[String]) -> Vec<String> {
    if phones.is_empty() {
        return vec![];
    }
    let mut out = vec![diphone_key(WORD_BOUNDARY, &phones[0])];
    out.extend(phones.windows(2).map(|w| diphone_key(&w[0], &w[1])));
    out.push(diphone_key(&phones[phones.len() - 1], WORD_BOUNDARY));
    out
}

pub(crate) fn join_distance(a: &Unit, b: &Unit) -> f64 {
    a.end_mfcc.iter().zip(&b.start_mfcc).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

struct Candidate<'a> {
    units: Vec<&'a Unit>,
    cost: f64,
    backoff: bool,
}

fn best<'a>(units: Option<&'a Vec<Unit>>, expected: f64, hop: f64, keep: usize) -> Vec<(&'a Unit, f64)> {
    let mut scored: Vec<(&Unit, f64)> = units
        .into_iter()
        .flatten()
        .map(|u| (u, (u.samples() as f64 / hop - expected).abs()))
        .collect();
    scored.sort_by(|a, b| a.1.total_cmp(&b.1));
    scored.truncate(keep);
    scored
}

fn candidates<'a>(index: &'a UnitIndex, phones: &[String], w: &SynthWeights) -> Vec<Vec<Candidate<'a>>> {
    let hop = index.hop_samples as f64;
    let mean = |p: &str| index.duration_means.get(p).copied().unwrap_or(0.0);
    let single = |list: Vec<(&'a Unit, f64)>, backoff| -> Vec<Candidate<'a>> {
        list.into_iter()
            .map(|(u, d)| Candidate {
                units: vec![u],
                cost: w.target * d,
                backoff,
            })
            .collect()
    };
    let edge = |primary: Option<&'a Vec<Unit>>, fallback: Option<&'a Vec<Unit>>, p: &str| {
        let direct = best(primary, mean(p) / 2.0, hop, MAX_CANDIDATES);
        if direct.is_empty() {
            single(best(fallback, mean(p) / 2.0, hop, MAX_CANDIDATES), true)
        } else {
            single(direct, false)
        }
    };
    let n = phones.len();
    let mut out = Vec::with_capacity(n + 1);
    out.push(edge(index.initial.get(&phones[0]), index.left_halves.get(&phones[0]), &phones[0]));
    for pair in phones.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let direct = best(index.diphones.get(&diphone_key(a, b)), (mean(a) + mean(b)) / 2.0, hop, MAX_CANDIDATES);
        if !direct.is_empty() {
            out.push(single(direct, false));
            continue;
        }
        let rights = best(index.right_halves.get(a), mean(a) / 2.0, hop, MAX_HALVES);
        let lefts = best(index.left_halves.get(b), mean(b) / 2.0, hop, MAX_HALVES);
        let mut pairs: Vec<Candidate> = rights
            .iter()
            .flat_map(|&(r, dr)| {
                lefts.iter().map(move |&(l, dl)| Candidate {
                    units: vec![r, l],
                    cost: w.target * (dr + dl) + w.join * join_distance(r, l),
                    backoff: true,
                })
            })
            .collect();
        pairs.sort_by(|x, y| x.cost.total_cmp(&y.cost));
        pairs.truncate(MAX_CANDIDATES);
        out.push(pairs);
    }
    out.push(edge(index.terminal.get(&phones[n - 1]), index.right_halves.get(&phones[n - 1]), &phones[n - 1]));
    out
}

/// Minimum-cost unit sequence for `phones` by dynamic programming over
/// target and join costs.
pub fn plan_synthesis(index: &UnitIndex, phones: &[String], weights: &SynthWeights) -> Result<SynthPlan, SynthError> {
    weights.validate()?;
    if phones.is_empty() {
        return Err(SynthError::EmptyText);
    }
    let labels = target_labels(phones);
    let cands = candidates(index, phones, weights);
    let missing: Vec<String> = labels.iter().zip(&cands).filter(|(_, c)| c.is_empty()).map(|(l, _)| l.clone()).collect();
    if !missing.is_empty() {
        return Err(SynthError::Unsynthesizable(missing));
    }

    let join = |a: &Candidate, b: &Candidate| weights.join * join_distance(a.units[a.units.len() - 1], b.units[0]);
    let mut cost: Vec<f64> = cands[0].iter().map(|c| c.cost).collect();
    let mut back: Vec<Vec<usize>> = vec![vec![]];
    for t in 1..cands.len() {
        let mut next = Vec::with_capacity(cands[t].len());
        let mut ptr = Vec::with_capacity(cands[t].len());
        for c in &cands[t] {
            let mut best = (f64::INFINITY, 0);
            for (j, p) in cands[t - 1].iter().enumerate() {
                let v = cost[j] + join(p, c);
                if v < best.0 {
                    best = (v, j);
                }
            }
            next.push(best.0 + c.cost);
            ptr.push(best.1);
        }
        cost = next;
        back.push(ptr);
    }
    let mut k = (0..cost.len()).fold(0, |b, i| if cost[i] < cost[b] { i } else { b });
    let mut chosen = vec![0; cands.len()];
    for t in (0..cands.len()).rev() {
        chosen[t] = k;
        if t > 0 {
            k = back[t][k];
        }
    }

    let picked: Vec<&Candidate> = chosen.iter().enumerate().map(|(t, &c)| &cands[t][c]).collect();
    let join_costs: Vec<f64> = picked.windows(2).map(|w| join(w[0], w[1])).collect();
    let steps: Vec<PlanStep> = picked
        .iter()
        .zip(labels)
        .map(|(c, target)| PlanStep {
            target,
            units: c.units.iter().map(|&u| u.clone()).collect(),
            backoff: c.backoff,
            target_cost: c.cost,
        })
        .collect();
    let total_cost = steps.iter().map(|s| s.target_cost).sum::<f64>() + join_costs.iter().sum::<f64>();
    Ok(SynthPlan {
        phones: phones.to_vec(),
        steps,
        join_costs,
        total_cost,
    })
}
