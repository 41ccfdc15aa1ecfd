use unicode_normalization::UnicodeNormalization;

/// Mechanical cleanup settings for one language.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CleanProfile {
    pub strip_punctuation: bool,
    pub lowercase: bool,
    /// Punctuation characters that are part of the orthography and survive stripping.
    pub keep: Vec<char>,
}

impl Default for CleanProfile {
    fn default() -> Self {
        Self {
            strip_punctuation: true,
            lowercase: false,
            // apostrophes occur inside words (Mfang'ano)
            keep: vec!['\'', '\u{2019}'],
        }
    }
}

pub(crate) fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(c,
            '\u{00A1}' | '\u{00A7}' | '\u{00AB}' | '\u{00B6}' | '\u{00B7}' | '\u{00BB}' | '\u{00BF}'
            | '\u{2010}'..='\u{2027}'
            | '\u{2030}'..='\u{205E}'
            | '\u{3001}'..='\u{3003}'
            | '\u{3008}'..='\u{3011}'
            | '\u{FF01}'..='\u{FF0F}')
}

/// Strip punctuation, collapse whitespace and compose to NFC. Idempotent.
pub fn clean_text(text: &str, profile: &CleanProfile) -> String {
    let stripped: String = text
        .nfc()
        .map(|c| {
            if profile.strip_punctuation && is_punctuation(c) && !profile.keep.contains(&c) {
                ' '
            } else {
                c
            }
        })
        .collect();
    let collapsed = stripped.split_whitespace().collect::<Vec<_>>().join(" ");
    let composed: String = collapsed.nfc().collect();
    if profile.lowercase {
        composed.to_lowercase().nfc().collect()
    } else {
        composed
    }
}
