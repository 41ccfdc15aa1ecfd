//! Deterministic text normalization: number expansion, cleanup and
//! rule-based grapheme-to-phone conversion.

mod clean;
mod g2p;
mod numbers;

use thiserror::Error;

pub use clean::{clean_text, CleanProfile};
pub use g2p::{g2p, G2pSegment, G2pTable, WORD_BOUNDARY};
pub use numbers::{normalize_numbers, JoinRule, Magnitude, NumberDictionary, ScaleOrder, ScaleRule};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TextError {
    #[error("number {value:?} at character {offset} is outside the dictionary range")]
    NumberOutOfRange { offset: usize, value: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Prompt or verse text after normalization, with its phone sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizedText {
    pub original: String,
    pub normalized: String,
    pub phones: Vec<String>,
    /// Character offsets `[start, end)` of each whitespace token in `normalized`.
    pub token_spans: Vec<(usize, usize)>,
}

impl NormalizedText {
    /// Expand numbers (when a dictionary is given), clean, then run G2P.
    pub fn new(
        original: &str,
        numbers: Option<&NumberDictionary>,
        profile: &CleanProfile,
        table: &G2pTable,
    ) -> Result<Self, TextError> {
        let expanded = match numbers {
            Some(dict) => normalize_numbers(original, dict)?,
            None => original.to_string(),
        };
        let normalized = clean_text(&expanded, profile);
        if let Some(offset) = normalized.chars().position(|c| c.is_ascii_digit()) {
            let value: String = normalized.chars().skip(offset).take_while(char::is_ascii_digit).collect();
            return Err(TextError::NumberOutOfRange { offset, value });
        }
        let phones = g2p(&normalized, table);
        let mut token_spans = Vec::new();
        let mut start = None;
        for (i, c) in normalized.chars().enumerate() {
            match (c.is_whitespace(), start) {
                (false, None) => start = Some(i),
                (true, Some(s)) => {
                    token_spans.push((s, i));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            token_spans.push((s, normalized.chars().count()));
        }
        Ok(Self {
            original: original.to_string(),
            normalized,
            phones,
            token_spans,
        })
    }
}
