use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::textnorm::{clean_text, CleanProfile};

/// Text normalization applied to both sides before scoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CerProfile {
    pub lowercase: bool,
    pub strip_punctuation: bool,
    /// Drop all spaces, so word joining ("kawuononi" / "kawuono ni") is free.
    pub ignore_spaces: bool,
    /// Collapse doubled vowels ("Mbeeri" / "Mberi").
    pub collapse_double_vowels: bool,
    /// Treat `w` and `u` as the same letter ("dwe" / "due").
    pub merge_w_u: bool,
}

impl CerProfile {
    pub fn strict() -> Self {
        Self {
            lowercase: true,
            strip_punctuation: true,
            ignore_spaces: false,
            collapse_double_vowels: false,
            merge_w_u: false,
        }
    }

    /// Forgives the usual orthographic disagreements of languages without a
    /// settled spelling.
    pub fn lenient() -> Self {
        Self {
            ignore_spaces: true,
            collapse_double_vowels: true,
            merge_w_u: true,
            ..Self::strict()
        }
    }

    pub fn apply(&self, text: &str) -> Vec<char> {
        let clean = clean_text(
            text,
            &CleanProfile {
                strip_punctuation: self.strip_punctuation,
                lowercase: self.lowercase,
                ..CleanProfile::default()
            },
        );
        let mut out: Vec<char> = Vec::with_capacity(clean.len());
        for c in clean.chars() {
            if self.ignore_spaces && c.is_whitespace() {
                continue;
            }
            let c = if self.merge_w_u && matches!(c, 'w' | 'W') { if c == 'w' { 'u' } else { 'U' } } else { c };
            if self.collapse_double_vowels && is_vowel(c) && out.last() == Some(&c) {
                continue;
            }
            out.push(c);
        }
        out
    }
}

impl Default for CerProfile {
    fn default() -> Self {
        Self::strict()
    }
}

fn is_vowel(c: char) -> bool {
    matches!(c.to_ascii_lowercase(), 'a' | 'e' | 'i' | 'o' | 'u')
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CerResult {
    pub distance: usize,
    pub reference_length: usize,
    pub cer: f64,
}

/// Edit distance with unit insert, delete and substitute costs.
pub fn levenshtein(a: &[char], b: &[char]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Character error rate of `hypothesis` against `reference`.
pub fn cer(reference: &str, hypothesis: &str, profile: &CerProfile) -> Result<CerResult, EvalError> {
    let r = profile.apply(reference);
    let h = profile.apply(hypothesis);
    if r.is_empty() {
        return Err(EvalError::EmptyReference);
    }
    let distance = levenshtein(&r, &h);
    Ok(CerResult {
        distance,
        reference_length: r.len(),
        cer: distance as f64 / r.len() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reported_error_pairs() {
        let s = CerProfile::strict();
        let r = cer("kawuono ni", "kawuononi", &s).unwrap();
        assert_eq!((r.distance, r.reference_length), (1, 10));
        assert!((r.cer - 0.10).abs() < 1e-12);
        let r = cer("dwe", "due", &s).unwrap();
        assert!((r.cer - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(cer("Mbeeri", "Mberi", &s).unwrap().distance, 1);
    }

    #[test]
    fn lenient_forgives_them() {
        let l = CerProfile::lenient();
        for (a, b) in [("kawuono ni", "kawuononi"), ("dwe", "due"), ("Mbeeri", "Mberi")] {
            assert_eq!(cer(a, b, &l).unwrap().distance, 0, "{a} / {b}");
        }
    }

    #[test]
    fn normalization_and_errors() {
        assert_eq!(cer("Higa,  adek!", "higa adek", &CerProfile::strict()).unwrap().cer, 0.0);
        assert!(matches!(cer(" ?! ", "x", &CerProfile::strict()), Err(EvalError::EmptyReference)));
        assert_eq!(cer("abc", "", &CerProfile::strict()).unwrap().cer, 1.0);
    }
}
