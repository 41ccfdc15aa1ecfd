//! Prompt selection: greedily pick sentences that add the most unseen
//! diphone types per unit of (phone-count) length.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap, HashMap, HashSet};
use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::textnorm::{g2p, G2pTable, WORD_BOUNDARY};

pub const DEFAULT_TARGET_COUNT: usize = 1500;
pub const DEFAULT_LENGTH_PENALTY: f64 = 0.5;

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("candidate {0:?} has no phones")]
    EmptyText(String),
    #[error("no candidates")]
    NoCandidates,
    #[error("target count must be at least 1")]
    ZeroTarget,
    #[error("duplicate candidate id {0:?}")]
    DuplicateId(String),
    #[error("unknown candidate id {0:?}")]
    UnknownId(String),
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Ordered phone pair. `#` on either side marks a word edge.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Diphone(pub String, pub String);

impl fmt::Display for Diphone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.0, self.1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateUtterance {
    pub id: String,
    pub text: String,
    /// Phones with `#` between words.
    pub phones: Vec<String>,
    /// Pairs inside each word: `len - 1` per word.
    pub internal: Vec<Diphone>,
    /// `#-first` and `last-#` for every word.
    pub boundary: Vec<Diphone>,
}

impl CandidateUtterance {
    pub fn diphones(&self) -> impl Iterator<Item = &Diphone> {
        self.internal.iter().chain(&self.boundary)
    }

    pub fn diphone_types(&self) -> BTreeSet<Diphone> {
        self.diphones().cloned().collect()
    }

    /// Length proxy: phones excluding word boundaries.
    pub fn phone_count(&self) -> usize {
        self.phones.iter().filter(|p| *p != WORD_BOUNDARY).count()
    }
}

/// Phones and diphones of one (already normalized) text.
pub fn extract_units(id: &str, text: &str, table: &G2pTable) -> Result<CandidateUtterance, PromptError> {
    let phones = g2p(text, table);
    if phones.is_empty() {
        return Err(PromptError::EmptyText(id.to_string()));
    }
    let mut internal = Vec::new();
    let mut boundary = Vec::new();
    for word in phones.split(|p| p == WORD_BOUNDARY) {
        let (Some(first), Some(last)) = (word.first(), word.last()) else {
            continue;
        };
        boundary.push(Diphone(WORD_BOUNDARY.into(), first.clone()));
        boundary.push(Diphone(last.clone(), WORD_BOUNDARY.into()));
        internal.extend(word.windows(2).map(|w| Diphone(w[0].clone(), w[1].clone())));
    }
    Ok(CandidateUtterance {
        id: id.to_string(),
        text: text.to_string(),
        phones,
        internal,
        boundary,
    })
}

/// [`extract_units`] over many `(id, text)` pairs, in parallel.
pub fn extract_all(lines: &[(String, String)], table: &G2pTable) -> Result<Vec<CandidateUtterance>, PromptError> {
    lines.par_iter().map(|(id, text)| extract_units(id, text, table)).collect()
}

/// Read an `id<TAB>text` candidate file.
pub fn read_candidates(path: impl AsRef<Path>) -> Result<Vec<(String, String)>, PromptError> {
    let path = path.as_ref();
    let content = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in content.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (id, text) = line.split_once('\t').ok_or_else(|| PromptError::Parse {
            path: path.display().to_string(),
            line: i + 1,
            message: "expected id<TAB>text".into(),
        })?;
        out.push((id.trim().to_string(), text.to_string()));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub selected: Vec<String>,
    pub covered: BTreeSet<Diphone>,
    /// Distinct diphone types in the whole pool.
    pub pool_types: usize,
    pub coverage_ratio: f64,
    /// New types added by each pick.
    pub gains: Vec<usize>,
    /// How many picks short of the target we ended (pool too small).
    pub shortfall: usize,
}

/// Heap entry; the ordering is the selection preference.
struct Entry {
    score: f64,
    len: usize,
    index: usize,
    id_rank: usize,
}

impl Entry {
    fn key_cmp(&self, other: &Self) -> Ordering {
        self.score
            .total_cmp(&other.score)
            .then(other.len.cmp(&self.len))
            .then(other.id_rank.cmp(&self.id_rank))
    }
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.key_cmp(other) == Ordering::Equal
    }
}
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key_cmp(other)
    }
}

/// Greedy selection of up to `target_count` prompts.
///
/// Each step takes the candidate maximizing `new types / phone_count^alpha`,
/// breaking ties by shorter length, then smaller id. Once nothing adds a new
/// type the rest is filled shortest-first. Candidates whose text repeats an
/// earlier one are ignored.
pub fn select_prompts(
    candidates: &[CandidateUtterance],
    target_count: usize,
    length_penalty_alpha: f64,
) -> Result<SelectionResult, PromptError> {
    if candidates.is_empty() {
        return Err(PromptError::NoCandidates);
    }
    if target_count == 0 {
        return Err(PromptError::ZeroTarget);
    }
    let mut seen_ids = HashSet::new();
    for c in candidates {
        if !seen_ids.insert(c.id.as_str()) {
            return Err(PromptError::DuplicateId(c.id.clone()));
        }
    }
    let mut seen_text = HashSet::new();
    let pool: Vec<usize> = (0..candidates.len())
        .filter(|&i| seen_text.insert(candidates[i].text.as_str()))
        .collect();

    let mut ids: Vec<usize> = pool.clone();
    ids.sort_by(|&a, &b| candidates[a].id.cmp(&candidates[b].id));
    let id_rank: HashMap<usize, usize> = ids.iter().enumerate().map(|(r, &i)| (i, r)).collect();

    let types: Vec<BTreeSet<Diphone>> = candidates.iter().map(CandidateUtterance::diphone_types).collect();
    let pool_types = pool.iter().flat_map(|&i| types[i].iter()).collect::<HashSet<_>>().len();
    let score = |gain: usize, len: usize| gain as f64 / (len.max(1) as f64).powf(length_penalty_alpha);

    let mut covered: BTreeSet<Diphone> = BTreeSet::new();
    let mut heap: BinaryHeap<Entry> = pool
        .iter()
        .map(|&i| Entry {
            score: score(types[i].len(), candidates[i].phone_count()),
            len: candidates[i].phone_count(),
            index: i,
            id_rank: id_rank[&i],
        })
        .collect();
    let mut taken = vec![false; candidates.len()];
    let mut selected = Vec::new();
    let mut gains = Vec::new();

    // lazy greedy: stale scores are upper bounds because gains only shrink
    while selected.len() < target_count {
        let Some(mut top) = heap.pop() else { break };
        let gain = types[top.index].iter().filter(|d| !covered.contains(*d)).count();
        if gain == 0 {
            continue;
        }
        top.score = score(gain, top.len);
        if heap.peek().is_some_and(|next| next.key_cmp(&top) == Ordering::Greater) {
            heap.push(top);
            continue;
        }
        covered.extend(types[top.index].iter().cloned());
        taken[top.index] = true;
        selected.push(candidates[top.index].id.clone());
        gains.push(gain);
    }

    if selected.len() < target_count {
        let mut rest: Vec<usize> = pool.iter().copied().filter(|&i| !taken[i]).collect();
        rest.sort_by(|&a, &b| {
            candidates[a]
                .phone_count()
                .cmp(&candidates[b].phone_count())
                .then_with(|| candidates[a].id.cmp(&candidates[b].id))
        });
        for i in rest.into_iter().take(target_count - selected.len()) {
            selected.push(candidates[i].id.clone());
            gains.push(0);
        }
    }

    let shortfall = target_count.saturating_sub(selected.len());
    Ok(SelectionResult {
        selected,
        coverage_ratio: if pool_types == 0 { 0.0 } else { covered.len() as f64 / pool_types as f64 },
        covered,
        pool_types,
        gains,
        shortfall,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub selected_count: usize,
    pub types_covered: usize,
    pub pool_types: usize,
    pub coverage_ratio: f64,
    pub missing: Vec<Diphone>,
    /// Total phone count of the selection.
    pub duration_proxy: usize,
}

impl fmt::Display for CoverageReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# selected\t{}", self.selected_count)?;
        writeln!(f, "# covered\t{}/{}", self.types_covered, self.pool_types)?;
        writeln!(f, "# coverage\t{:.4}", self.coverage_ratio)?;
        writeln!(f, "# phones\t{}", self.duration_proxy)?;
        let missing: Vec<String> = self.missing.iter().map(Diphone::to_string).collect();
        writeln!(f, "# missing\t{}", missing.join(" "))
    }
}

/// Coverage of the selected ids against the whole candidate pool.
pub fn coverage_report(selected: &[String], candidates: &[CandidateUtterance]) -> Result<CoverageReport, PromptError> {
    let by_id: HashMap<&str, &CandidateUtterance> = candidates.iter().map(|c| (c.id.as_str(), c)).collect();
    let pool: BTreeSet<Diphone> = candidates.iter().flat_map(|c| c.diphones().cloned()).collect();
    let mut covered = BTreeSet::new();
    let mut phones = 0;
    for id in selected {
        let c = by_id.get(id.as_str()).ok_or_else(|| PromptError::UnknownId(id.clone()))?;
        covered.extend(c.diphones().cloned());
        phones += c.phone_count();
    }
    Ok(CoverageReport {
        selected_count: selected.len(),
        types_covered: covered.len(),
        pool_types: pool.len(),
        coverage_ratio: if pool.is_empty() { 0.0 } else { covered.len() as f64 / pool.len() as f64 },
        missing: pool.difference(&covered).cloned().collect(),
        duration_proxy: phones,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> G2pTable {
        G2pTable::identity("x")
    }

    fn cand(id: &str, text: &str) -> CandidateUtterance {
        extract_units(id, text, &table()).unwrap()
    }

    fn d(a: &str, b: &str) -> Diphone {
        Diphone(a.into(), b.into())
    }

    #[test]
    fn internal_pairs() {
        let c = cand("u", "aba");
        assert_eq!(c.internal, vec![d("a", "b"), d("b", "a")]);
        assert_eq!(c.boundary, vec![d("#", "a"), d("a", "#")]);
    }

    #[test]
    fn single_phone_has_boundary_pairs_only() {
        let c = cand("u", "a");
        assert!(c.internal.is_empty());
        assert_eq!(c.diphone_types().len(), 2);
    }

    #[test]
    fn multi_word() {
        let c = cand("u", "ab c");
        assert_eq!(c.internal, vec![d("a", "b")]);
        assert_eq!(c.boundary, vec![d("#", "a"), d("b", "#"), d("#", "c"), d("c", "#")]);
        assert_eq!(c.phone_count(), 3);
        assert!(matches!(extract_units("e", "  ", &table()), Err(PromptError::EmptyText(_))));
    }

    #[test]
    fn dominant_candidate_first() {
        let pool = vec![cand("a", "ab"), cand("b", "bc"), cand("all", "abc cba"), cand("c", "ca")];
        let r = select_prompts(&pool, 1, 0.5).unwrap();
        assert_eq!(r.selected, vec!["all"]);
    }

    #[test]
    fn ties_prefer_shorter_then_id() {
        // three types each; "a" is longest
        let pool = vec![cand("z", "ab"), cand("y", "cd"), cand("a", "eee")];
        let r = select_prompts(&pool, 3, 0.0).unwrap();
        assert_eq!(r.selected, vec!["y", "z", "a"]);
        let r = select_prompts(&pool, 3, 0.5).unwrap();
        assert_eq!(r.selected, vec!["y", "z", "a"]);
        let again = select_prompts(&pool, 3, 0.5).unwrap();
        assert_eq!(again, r);
    }

    #[test]
    fn fill_and_shortfall() {
        let pool = vec![cand("a", "ab"), cand("b", "ab"), cand("c", "ba"), cand("d", "abab")];
        // "b" repeats "a" and is ignored; "d" adds nothing after a and c
        let r = select_prompts(&pool, 10, 0.5).unwrap();
        assert_eq!(r.selected, vec!["a", "c", "d"]);
        assert_eq!(r.gains, vec![3, 3, 0]);
        assert_eq!(r.shortfall, 7);
        assert_eq!(r.coverage_ratio, 1.0);
        assert!(matches!(select_prompts(&pool, 0, 0.5), Err(PromptError::ZeroTarget)));
        assert!(matches!(select_prompts(&[], 1, 0.5), Err(PromptError::NoCandidates)));
        let dup = vec![cand("a", "ab"), cand("a", "cd")];
        assert!(matches!(select_prompts(&dup, 1, 0.5), Err(PromptError::DuplicateId(_))));
    }

    #[test]
    fn report_edges() {
        let pool = vec![cand("a", "ab"), cand("c", "ba")];
        let all = coverage_report(&["a".into(), "c".into()], &pool).unwrap();
        assert!(all.missing.is_empty());
        assert_eq!(all.coverage_ratio, 1.0);
        let none = coverage_report(&[], &pool).unwrap();
        assert_eq!(none.types_covered, 0);
        assert_eq!(none.coverage_ratio, 0.0);
        assert!(coverage_report(&["zz".into()], &pool).is_err());
        assert!(all.to_string().contains("# covered\t6/6"));
    }
}
