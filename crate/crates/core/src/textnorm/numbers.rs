//! Cardinal number expansion driven by a per-language dictionary file.
//!
//! File format (UTF-8, `#` starts a comment line):
//!
//! ```text
//! @lang luo
//! 1	achiel
//! 10	apar
//! 100	mia achiel
//! @rule scale 100 order=scale-first word=mia
//! @rule join 10 1 gi
//! @rule join * * " "
//! @rule max 999999
//! ```
//!
//! A value is spelled by exact atom lookup when possible. Otherwise the
//! largest declared scale `S <= v` splits it into `q*S + r` (the multiplier
//! `q` is spelled recursively and placed before or after the scale word), or,
//! with no scale available, the largest atom `a <= v` is taken and the rest
//! `v - a` spelled after it. The joiner between a head and its remainder is
//! chosen by the power-of-ten magnitudes of the two parts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use super::TextError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScaleOrder {
    /// "three hundred"
    MultiplierFirst,
    /// "mia tatu"
    ScaleFirst,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScaleRule {
    pub order: ScaleOrder,
    /// Word used when the scale is multiplied; falls back to the atom.
    pub word: Option<String>,
    /// Inserted between the multiplier and the scale word.
    pub joiner: String,
}

/// Magnitude selector in a join rule: a power of ten, or any.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Magnitude {
    Exact(u64),
    Any,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JoinRule {
    pub left: Magnitude,
    pub right: Magnitude,
    pub joiner: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NumberDictionary {
    pub language: String,
    atoms: BTreeMap<u64, String>,
    scales: BTreeMap<u64, ScaleRule>,
    joins: Vec<JoinRule>,
    max_value: Option<u64>,
}

fn magnitude(v: u64) -> u64 {
    let mut m = 1u64;
    while v / m >= 10 {
        m *= 10;
    }
    m
}

impl NumberDictionary {
    pub fn new(language: impl Into<String>) -> Self {
        Self {
            language: language.into(),
            ..Self::default()
        }
    }

    pub fn with_atom(mut self, value: u64, word: impl Into<String>) -> Self {
        self.atoms.insert(value, word.into());
        self
    }

    pub fn with_scale(mut self, value: u64, rule: ScaleRule) -> Self {
        self.scales.insert(value, rule);
        self
    }

    pub fn with_join(mut self, left: Magnitude, right: Magnitude, joiner: impl Into<String>) -> Self {
        self.joins.push(JoinRule {
            left,
            right,
            joiner: joiner.into(),
        });
        self
    }

    pub fn with_max(mut self, max: u64) -> Self {
        self.max_value = Some(max);
        self
    }

    pub fn atoms(&self) -> impl Iterator<Item = (u64, &str)> {
        self.atoms.iter().map(|(v, w)| (*v, w.as_str()))
    }

    fn joiner(&self, left: u64, right: u64) -> &str {
        let (l, r) = (Magnitude::Exact(magnitude(left)), Magnitude::Exact(magnitude(right)));
        [(l, r), (l, Magnitude::Any), (Magnitude::Any, r), (Magnitude::Any, Magnitude::Any)]
            .iter()
            .find_map(|&(a, b)| {
                self.joins
                    .iter()
                    .find(|j| j.left == a && j.right == b)
                    .map(|j| j.joiner.as_str())
            })
            .unwrap_or(" ")
    }

    /// Spell a non-negative integer, or `None` if it is outside the range the
    /// dictionary can compose.
    pub fn spell(&self, value: u64) -> Option<String> {
        if self.max_value.is_some_and(|m| value > m) {
            return None;
        }
        self.spell_inner(value)
    }

    fn spell_inner(&self, value: u64) -> Option<String> {
        if let Some(word) = self.atoms.get(&value) {
            return Some(word.clone());
        }
        let (head, head_value) = if let Some((&scale, rule)) = self.scales.range(..=value).next_back() {
            let q = value / scale;
            let is_top = self.scales.range(scale + 1..).next().is_none();
            if is_top && q >= scale {
                return None;
            }
            let head = match self.atoms.get(&scale) {
                Some(word) if q == 1 => word.clone(),
                _ => {
                    let scale_word = rule.word.as_ref().or_else(|| self.atoms.get(&scale))?;
                    let multiplier = self.spell_inner(q)?;
                    match rule.order {
                        ScaleOrder::MultiplierFirst => format!("{multiplier}{}{scale_word}", rule.joiner),
                        ScaleOrder::ScaleFirst => format!("{scale_word}{}{multiplier}", rule.joiner),
                    }
                }
            };
            (head, q * scale)
        } else {
            let (&atom, word) = self.atoms.range(..=value).next_back()?;
            if atom == 0 || magnitude(value - atom) >= magnitude(atom) {
                return None;
            }
            (word.clone(), atom)
        };
        let rest = value - head_value;
        if rest == 0 {
            return Some(head);
        }
        let tail = self.spell_inner(rest)?;
        Some(format!("{head}{}{tail}", self.joiner(head_value, rest)))
    }

    /// Serialize to the line format; `parse` of the result gives back `self`.
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        if !self.language.is_empty() {
            let _ = writeln!(out, "@lang {}", self.language);
        }
        for (v, w) in &self.atoms {
            let _ = writeln!(out, "{v}\t{w}");
        }
        for (v, rule) in &self.scales {
            let order = match rule.order {
                ScaleOrder::MultiplierFirst => "multiplier-first",
                ScaleOrder::ScaleFirst => "scale-first",
            };
            let _ = write!(out, "@rule scale {v} order={order}");
            if let Some(word) = &rule.word {
                let _ = write!(out, " word={}", quote_if_needed(word));
            }
            if rule.joiner != " " {
                let _ = write!(out, " joiner=\"{}\"", rule.joiner);
            }
            out.push('\n');
        }
        for j in &self.joins {
            let _ = writeln!(
                out,
                "@rule join {} {} {}",
                magnitude_token(j.left),
                magnitude_token(j.right),
                joiner_token(&j.joiner)
            );
        }
        if let Some(m) = self.max_value {
            let _ = writeln!(out, "@rule max {m}");
        }
        out
    }
}

fn magnitude_token(m: Magnitude) -> String {
    match m {
        Magnitude::Exact(v) => v.to_string(),
        Magnitude::Any => "*".into(),
    }
}

fn quote_if_needed(s: &str) -> String {
    if s.is_empty() || s.chars().any(char::is_whitespace) {
        format!("\"{s}\"")
    } else {
        s.to_string()
    }
}

/// A bare word `w` means `" w "`; anything else is written quoted.
fn joiner_token(joiner: &str) -> String {
    let inner = joiner.strip_prefix(' ').and_then(|s| s.strip_suffix(' '));
    match inner {
        Some(w) if !w.is_empty() && !w.chars().any(|c| c.is_whitespace() || c == '"') => w.to_string(),
        _ => format!("\"{joiner}\""),
    }
}

fn parse_joiner(token: &str) -> String {
    match token.strip_prefix('"').and_then(|s| s.strip_suffix('"')) {
        Some(literal) => literal.to_string(),
        None => format!(" {token} "),
    }
}

/// Whitespace tokenizer that keeps `"..."` runs (including `key="..."`) intact.
fn tokenize(line: &str) -> Result<Vec<String>, String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut in_quotes = false;
    for c in line.chars() {
        match c {
            '"' => {
                in_quotes = !in_quotes;
                current.push(c);
            }
            c if c.is_whitespace() && !in_quotes => {
                if !current.is_empty() {
                    tokens.push(std::mem::take(&mut current));
                }
            }
            c => current.push(c),
        }
    }
    if in_quotes {
        return Err("unterminated quote".into());
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    Ok(tokens)
}

fn parse_magnitude(token: &str) -> Result<Magnitude, String> {
    if token == "*" {
        return Ok(Magnitude::Any);
    }
    let v: u64 = token.parse().map_err(|_| format!("bad magnitude {token:?}"))?;
    if v == 0 || magnitude(v) != v {
        return Err(format!("magnitude {v} is not a power of ten"));
    }
    Ok(Magnitude::Exact(v))
}

impl FromStr for NumberDictionary {
    type Err = TextError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut dict = NumberDictionary::default();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let err = |message: String| TextError::Parse { line: line_no, message };
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("@lang") {
                dict.language = rest.trim().to_string();
            } else if let Some(rest) = line.strip_prefix("@rule") {
                let tokens = tokenize(rest).map_err(err)?;
                match tokens.first().map(String::as_str) {
                    Some("scale") => {
                        let value: u64 = tokens
                            .get(1)
                            .and_then(|t| t.parse().ok())
                            .ok_or_else(|| err("scale needs a value".into()))?;
                        let mut rule = ScaleRule {
                            order: ScaleOrder::MultiplierFirst,
                            word: None,
                            joiner: " ".into(),
                        };
                        for opt in &tokens[2..] {
                            let (key, val) = opt
                                .split_once('=')
                                .ok_or_else(|| err(format!("expected key=value, got {opt:?}")))?;
                            let val = val.trim_matches('"');
                            match key {
                                "order" => {
                                    rule.order = match val {
                                        "multiplier-first" => ScaleOrder::MultiplierFirst,
                                        "scale-first" => ScaleOrder::ScaleFirst,
                                        other => return Err(err(format!("unknown order {other:?}"))),
                                    }
                                }
                                "word" => rule.word = Some(val.to_string()),
                                "joiner" => rule.joiner = val.to_string(),
                                other => return Err(err(format!("unknown scale option {other:?}"))),
                            }
                        }
                        dict.scales.insert(value, rule);
                    }
                    Some("join") => {
                        if tokens.len() != 4 {
                            return Err(err("join takes <left> <right> <joiner>".into()));
                        }
                        dict.joins.push(JoinRule {
                            left: parse_magnitude(&tokens[1]).map_err(err)?,
                            right: parse_magnitude(&tokens[2]).map_err(err)?,
                            joiner: parse_joiner(&tokens[3]),
                        });
                    }
                    Some("max") => {
                        dict.max_value = Some(
                            tokens
                                .get(1)
                                .and_then(|t| t.parse().ok())
                                .ok_or_else(|| err("max needs a value".into()))?,
                        );
                    }
                    other => return Err(err(format!("unknown rule {other:?}"))),
                }
            } else {
                let (value, word) = line
                    .split_once('\t')
                    .ok_or_else(|| err("expected value<TAB>word".into()))?;
                let value: u64 = value
                    .trim()
                    .parse()
                    .map_err(|_| err(format!("bad value {value:?}")))?;
                let word = word.trim();
                if word.is_empty() {
                    return Err(err("empty word".into()));
                }
                if dict.atoms.insert(value, word.to_string()).is_some() {
                    return Err(err(format!("duplicate atom {value}")));
                }
            }
        }
        for (value, rule) in &dict.scales {
            if rule.word.is_none() && !dict.atoms.contains_key(value) {
                return Err(TextError::Parse {
                    line: 0,
                    message: format!("scale {value} has neither an atom nor a word"),
                });
            }
        }
        Ok(dict)
    }
}

/// Replace every ASCII digit run with its spelled-out form.
pub fn normalize_numbers(text: &str, dict: &NumberDictionary) -> Result<String, TextError> {
    let mut out = String::with_capacity(text.len());
    let mut run = String::new();
    let mut run_offset = 0;
    let flush = |run: &mut String, offset: usize, out: &mut String| -> Result<(), TextError> {
        if run.is_empty() {
            return Ok(());
        }
        let spelled = run
            .parse::<u64>()
            .ok()
            .and_then(|v| dict.spell(v))
            .ok_or_else(|| TextError::NumberOutOfRange {
                offset,
                value: run.clone(),
            })?;
        out.push_str(&spelled);
        run.clear();
        Ok(())
    };
    for (char_idx, c) in text.chars().enumerate() {
        if c.is_ascii_digit() {
            if run.is_empty() {
                run_offset = char_idx;
            }
            run.push(c);
        } else {
            flush(&mut run, run_offset, &mut out)?;
            out.push(c);
        }
    }
    flush(&mut run, run_offset, &mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn english() -> NumberDictionary {
        let text = "\
# toy English
@lang en
0\tzero
1\tone
2\ttwo
3\tthree
4\tfour
5\tfive
6\tsix
7\tseven
8\teight
9\tnine
10\tten
11\televen
12\ttwelve
13\tthirteen
14\tfourteen
15\tfifteen
16\tsixteen
17\tseventeen
18\teighteen
19\tnineteen
20\ttwenty
30\tthirty
40\tforty
50\tfifty
60\tsixty
70\tseventy
80\teighty
90\tninety
100\tone hundred
1000\tone thousand
@rule scale 100 order=multiplier-first word=hundred
@rule scale 1000 order=multiplier-first word=thousand
@rule join 10 1 \"-\"
@rule join 100 * and
";
        text.parse().unwrap()
    }

    #[test]
    fn direct_atom_lookup() {
        let dict = NumberDictionary::new("sw").with_atom(3, "tatu");
        assert_eq!(normalize_numbers("Sura 3", &dict).unwrap(), "Sura tatu");
    }

    #[test]
    fn tens_plus_units_with_space() {
        let dict = NumberDictionary::new("x")
            .with_atom(40, "fortyW")
            .with_atom(2, "twoW")
            .with_join(Magnitude::Exact(10), Magnitude::Exact(1), " ");
        assert_eq!(normalize_numbers("42", &dict).unwrap(), "fortyW twoW");
    }

    #[test]
    fn no_digits_unchanged() {
        let text = "Nyasaye ohero piny";
        assert_eq!(normalize_numbers(text, &english()).unwrap(), text);
    }

    #[test]
    fn composed_values() {
        let d = english();
        assert_eq!(d.spell(42).unwrap(), "forty-two");
        assert_eq!(d.spell(300).unwrap(), "three hundred");
        assert_eq!(d.spell(105).unwrap(), "one hundred and five");
        assert_eq!(d.spell(342).unwrap(), "three hundred and forty-two");
        assert_eq!(d.spell(3013).unwrap(), "three thousand thirteen");
        assert_eq!(d.spell(0).unwrap(), "zero");
    }

    #[test]
    fn scale_first_languages() {
        let d: NumberDictionary = "\
1\tmoja
3\ttatu
10\tkumi
100\tmia moja
@rule scale 100 order=scale-first word=mia
@rule join 10 1 na
@rule join 100 * na
"
        .parse()
        .unwrap();
        assert_eq!(d.spell(300).unwrap(), "mia tatu");
        assert_eq!(d.spell(13).unwrap(), "kumi na tatu");
        assert_eq!(d.spell(113).unwrap(), "mia moja na kumi na tatu");
    }

    #[test]
    fn out_of_range_reports_offset_and_value() {
        let d = english();
        let err = normalize_numbers("ab 1000000 cd", &d).unwrap_err();
        assert_eq!(
            err,
            TextError::NumberOutOfRange {
                offset: 3,
                value: "1000000".into()
            }
        );
        let err = normalize_numbers("99999999999999999999999", &d).unwrap_err();
        assert!(matches!(err, TextError::NumberOutOfRange { offset: 0, .. }));
        let limited = d.clone().with_max(100);
        assert!(normalize_numbers("101", &limited).is_err());
        // additive composition cannot stack equal magnitudes
        let tens_only = NumberDictionary::new("x").with_atom(90, "ninety").with_atom(60, "sixty");
        assert!(tens_only.spell(150).is_none());
    }

    #[test]
    fn file_round_trip() {
        let d = english();
        let again: NumberDictionary = d.to_file_string().parse().unwrap();
        assert_eq!(again, d);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = "1\tone\n@rule bogus\n".parse::<NumberDictionary>().unwrap_err();
        assert!(matches!(err, TextError::Parse { line: 2, .. }));
        let err = "x\tone\n".parse::<NumberDictionary>().unwrap_err();
        assert!(matches!(err, TextError::Parse { line: 1, .. }));
    }

    proptest! {
        #[test]
        fn idempotent_and_digit_free(text in "[a-z 0-9]{0,30}") {
            let d = english();
            if let Ok(once) = normalize_numbers(&text, &d) {
                prop_assert!(!once.chars().any(|c| c.is_ascii_digit()));
                prop_assert_eq!(normalize_numbers(&once, &d).unwrap(), once);
            }
        }

        #[test]
        fn every_atom_spells_itself(idx in 0usize..30) {
            let d = english();
            let (v, w) = d.atoms().nth(idx).unwrap();
            prop_assert_eq!(normalize_numbers(&v.to_string(), &d).unwrap(), w);
        }

        #[test]
        fn whole_range_is_composable(v in 0u64..1_000_000) {
            let spelled = english().spell(v);
            prop_assert!(spelled.is_some(), "{} not composable", v);
        }
    }
}
