use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use super::TextError;

/// Phone symbol emitted between words.
pub const WORD_BOUNDARY: &str = "#";

/// Longest-match-first grapheme rewrite table.
///
/// File format: `grapheme<TAB>phone phone ...` per line, `#` comments,
/// optional `@lang <tag>` and `@phones <p> <p> ...` lines. Letters without a
/// rule map to themselves.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct G2pTable {
    pub language: String,
    rules: BTreeMap<String, Vec<String>>,
    inventory: BTreeSet<String>,
    longest: usize,
}

/// One step of a G2P pass: the graphemes consumed and the phones produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct G2pSegment {
    pub graphemes: String,
    pub phones: Vec<String>,
    /// True when no rule matched and the letter mapped to itself.
    pub default_rule: bool,
}

impl G2pTable {
    /// A table with only the identity default rule.
    pub fn identity(language: impl Into<String>) -> Self {
        Self {
            language: language.into(),
            ..Self::default()
        }
    }

    pub fn with_rule(mut self, grapheme: &str, phones: &str) -> Result<Self, TextError> {
        self.insert_rule(grapheme, phones, 0)?;
        Ok(self)
    }

    fn insert_rule(&mut self, grapheme: &str, phones: &str, line: usize) -> Result<(), TextError> {
        let grapheme = grapheme.to_lowercase();
        if grapheme.is_empty() || grapheme.chars().any(char::is_whitespace) {
            return Err(TextError::Parse {
                line,
                message: format!("invalid grapheme {grapheme:?}"),
            });
        }
        let phones: Vec<String> = phones.split_whitespace().map(str::to_string).collect();
        if phones.is_empty() {
            return Err(TextError::Parse {
                line,
                message: format!("rule for {grapheme:?} produces no phones"),
            });
        }
        self.inventory.extend(phones.iter().cloned());
        self.longest = self.longest.max(grapheme.chars().count());
        self.rules.insert(grapheme, phones);
        Ok(())
    }

    pub fn inventory(&self) -> &BTreeSet<String> {
        &self.inventory
    }

    pub fn rules(&self) -> impl Iterator<Item = (&str, &[String])> {
        self.rules.iter().map(|(g, p)| (g.as_str(), p.as_slice()))
    }

    /// Segment one whitespace-free, lowercased word.
    fn segment_word(&self, chars: &[char], out: &mut Vec<G2pSegment>) {
        let mut i = 0;
        while i < chars.len() {
            let max = self.longest.min(chars.len() - i);
            let matched = (1..=max).rev().find_map(|len| {
                let key: String = chars[i..i + len].iter().collect();
                self.rules.get(&key).map(|p| (key, p.clone(), len))
            });
            match matched {
                Some((graphemes, phones, len)) => {
                    out.push(G2pSegment {
                        graphemes,
                        phones,
                        default_rule: false,
                    });
                    i += len;
                }
                None => {
                    out.push(G2pSegment {
                        graphemes: chars[i].to_string(),
                        phones: vec![chars[i].to_string()],
                        default_rule: true,
                    });
                    i += 1;
                }
            }
        }
    }

    /// Per-word segmentations of lowercased `text`.
    pub fn segment(&self, text: &str) -> Vec<Vec<G2pSegment>> {
        text.to_lowercase()
            .split_whitespace()
            .map(|word| {
                let chars: Vec<char> = word.chars().collect();
                let mut segs = Vec::new();
                self.segment_word(&chars, &mut segs);
                segs
            })
            .collect()
    }

    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        if !self.language.is_empty() {
            out.push_str(&format!("@lang {}\n", self.language));
        }
        for (g, p) in &self.rules {
            out.push_str(&format!("{g}\t{}\n", p.join(" ")));
        }
        out
    }
}

/// Phones for `text`, with [`WORD_BOUNDARY`] between words.
pub fn g2p(text: &str, table: &G2pTable) -> Vec<String> {
    let mut phones = Vec::new();
    for (w, word) in table.segment(text).into_iter().enumerate() {
        if w > 0 {
            phones.push(WORD_BOUNDARY.to_string());
        }
        phones.extend(word.into_iter().flat_map(|s| s.phones));
    }
    phones
}

impl FromStr for G2pTable {
    type Err = TextError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut table = G2pTable::default();
        let mut declared: Option<BTreeSet<String>> = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') && !line.starts_with("#\t") {
                continue;
            }
            if let Some(rest) = line.strip_prefix("@lang") {
                table.language = rest.trim().to_string();
            } else if let Some(rest) = line.strip_prefix("@phones") {
                declared
                    .get_or_insert_with(BTreeSet::new)
                    .extend(rest.split_whitespace().map(str::to_string));
            } else {
                let (g, p) = line.split_once('\t').ok_or_else(|| TextError::Parse {
                    line: line_no,
                    message: "expected grapheme<TAB>phones".into(),
                })?;
                table.insert_rule(g.trim(), p, line_no)?;
            }
        }
        if let Some(declared) = declared {
            if let Some(stray) = table.inventory.iter().find(|p| !declared.contains(*p)) {
                return Err(TextError::Parse {
                    line: 0,
                    message: format!("phone {stray:?} is not in the declared inventory"),
                });
            }
            table.inventory = declared;
        }
        Ok(table)
    }
}
