use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreferenceChoice {
    A,
    B,
    Same,
}

impl FromStr for PreferenceChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "a" => Ok(Self::A),
            "b" => Ok(Self::B),
            "same" | "no difference" | "no_difference" => Ok(Self::Same),
            other => Err(format!("{other:?} is not A, B or No difference")),
        }
    }
}

/// A pair of systems compared on one prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreferenceItem {
    pub id: String,
    pub systems: [String; 2],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreferenceResponse {
    pub evaluator: String,
    pub item: String,
    /// True when `systems[1]` was presented as "A".
    pub swapped: bool,
    pub choice: PreferenceChoice,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "system")]
pub enum Winner {
    System(String),
    Tie,
    NoResponses,
}

impl fmt::Display for Winner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Winner::System(s) => f.write_str(s),
            Winner::Tie => f.write_str("tie"),
            Winner::NoResponses => f.write_str("-"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvaluatorRow {
    pub evaluator: String,
    pub counts: BTreeMap<String, usize>,
    pub same: usize,
    pub winner: Winner,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreferenceTally {
    /// Systems in the order items first name them.
    pub systems: Vec<String>,
    pub counts: BTreeMap<String, usize>,
    pub same: usize,
    pub responses: usize,
    pub per_evaluator: Vec<EvaluatorRow>,
    pub winner: Winner,
}

fn winner(counts: &BTreeMap<String, usize>, same: usize) -> Winner {
    let total: usize = counts.values().sum::<usize>() + same;
    if total == 0 {
        return Winner::NoResponses;
    }
    let best = counts.values().copied().max().unwrap_or(0);
    let mut leaders = counts.iter().filter(|(_, &c)| c == best);
    match (leaders.next(), leaders.next()) {
        (Some((name, _)), None) => Winner::System(name.clone()),
        _ => Winner::Tie,
    }
}

/// Count preferences per system after undoing the A/B presentation order.
///
/// Every system named by an item gets a count, even if never chosen.
pub fn tally_preferences(items: &[PreferenceItem], responses: &[PreferenceResponse]) -> Result<PreferenceTally, EvalError> {
    let by_id: HashMap<&str, &PreferenceItem> = items.iter().map(|i| (i.id.as_str(), i)).collect();
    let mut systems: Vec<String> = Vec::new();
    for s in items.iter().flat_map(|i| i.systems.iter()) {
        if !systems.contains(s) {
            systems.push(s.clone());
        }
    }
    let zero: BTreeMap<String, usize> = items.iter().flat_map(|i| i.systems.iter().map(|s| (s.clone(), 0))).collect();
    let mut counts = zero.clone();
    let mut same = 0;
    let mut rows: BTreeMap<&str, (BTreeMap<String, usize>, usize)> = BTreeMap::new();
    for r in responses {
        let item = by_id.get(r.item.as_str()).ok_or_else(|| EvalError::UnknownItem(r.item.clone()))?;
        let (first, second) = if r.swapped { (1, 0) } else { (0, 1) };
        let row = rows.entry(r.evaluator.as_str()).or_insert_with(|| (zero.clone(), 0));
        match r.choice {
            PreferenceChoice::A => {
                *counts.get_mut(&item.systems[first]).expect("seeded") += 1;
                *row.0.get_mut(&item.systems[first]).expect("seeded") += 1;
            }
            PreferenceChoice::B => {
                *counts.get_mut(&item.systems[second]).expect("seeded") += 1;
                *row.0.get_mut(&item.systems[second]).expect("seeded") += 1;
            }
            PreferenceChoice::Same => {
                same += 1;
                row.1 += 1;
            }
        }
    }
    let per_evaluator = rows
        .into_iter()
        .map(|(evaluator, (counts, same))| EvaluatorRow {
            evaluator: evaluator.to_string(),
            winner: winner(&counts, same),
            counts,
            same,
        })
        .collect();
    Ok(PreferenceTally {
        systems,
        winner: winner(&counts, same),
        counts,
        same,
        responses: responses.len(),
        per_evaluator,
    })
}

impl fmt::Display for PreferenceTally {
    /// Tab-separated table: one row per evaluator, then the total.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let systems = &self.systems;
        write!(f, "Evaluator")?;
        for s in systems {
            write!(f, "\t{s}")?;
        }
        writeln!(f, "\tSame\tBest")?;
        for row in &self.per_evaluator {
            write!(f, "{}", row.evaluator)?;
            for s in systems {
                write!(f, "\t{}", row.counts.get(s).copied().unwrap_or(0))?;
            }
            writeln!(f, "\t{}\t{}", row.same, row.winner)?;
        }
        write!(f, "Total")?;
        for s in systems {
            write!(f, "\t{}", self.counts[s])?;
        }
        writeln!(f, "\t{}\t{}", self.same, self.winner)
    }
}
