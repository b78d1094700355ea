//! Unicode normalization, ZWNJ handling, tokenization and corpus pruning.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use unicode_general_category::get_general_category;
use unicode_normalization::{is_nfc_quick, IsNormalized, UnicodeNormalization};

use crate::lexicon::Lexicon;

/// Zero-width non-joiner.
pub const ZWNJ: char = '\u{200C}';

pub const MIN_TOKENS: usize = 5;
pub const MAX_TOKENS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZwnjMode {
    #[default]
    Preserve,
    Strip,
}

impl FromStr for ZwnjMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "preserve" => Ok(Self::Preserve),
            "strip" => Ok(Self::Strip),
            other => Err(format!("unknown zwnj mode `{other}` (expected preserve|strip)")),
        }
    }
}

impl fmt::Display for ZwnjMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Preserve => "preserve",
            Self::Strip => "strip",
        })
    }
}

/// Canonical composition (NFC), borrowing-friendly fast path for text that
/// is already composed.
pub fn nfc(text: &str) -> String {
    match is_nfc_quick(text.chars()) {
        IsNormalized::Yes => text.to_owned(),
        _ => text.nfc().collect(),
    }
}

/// NFC-normalizes `text` and, in [`ZwnjMode::Strip`], removes every U+200C.
pub fn normalize_zwnj(text: &str, mode: ZwnjMode) -> String {
    match mode {
        ZwnjMode::Preserve => nfc(text),
        // removal can bring a base letter next to a combining mark, so
        // compose afterwards
        ZwnjMode::Strip => text.chars().filter(|&c| c != ZWNJ).nfc().collect(),
    }
}

fn is_latin_letter(c: char) -> bool {
    c.is_ascii_alphabetic() || (('\u{C0}'..='\u{FF}').contains(&c) && c != '\u{D7}' && c != '\u{F7}')
}

/// Characters dropped before tokenization: numbers (N*), punctuation (P*),
/// symbols (S*) and Basic Latin / Latin-1 letters.
pub fn is_removed(c: char) -> bool {
    if is_latin_letter(c) {
        return true;
    }
    matches!(get_general_category(c).abbreviation().as_bytes()[0], b'N' | b'P' | b'S')
}

/// A tokenized line.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Sentence {
    pub tokens: Vec<String>,
    pub raw: String,
}

impl Sentence {
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        let raw = tokens.join(" ");
        Self { tokens, raw }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Tokens joined by single spaces.
    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }
}

/// NFC-normalizes `line`, turns every removed character into a separator and
/// splits on whitespace runs.
pub fn tokenize(line: &str) -> Sentence {
    let composed = nfc(line);
    let cleaned: String = composed.chars().map(|c| if is_removed(c) { ' ' } else { c }).collect();
    let tokens = cleaned.split_whitespace().map(str::to_owned).collect();
    Sentence {
        tokens,
        raw: line.to_owned(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rejection {
    Oov,
    TooShort,
    TooLong,
}

impl Rejection {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Oov => "oov",
            Self::TooShort => "too_short",
            Self::TooLong => "too_long",
        }
    }
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Tokenizes `line` and accepts it iff it has between [`MIN_TOKENS`] and
/// [`MAX_TOKENS`] tokens (counted after removal) and every token is in the
/// lexicon. Length is checked before membership.
pub fn prune_line(line: &str, lexicon: &Lexicon) -> Result<Sentence, Rejection> {
    let sentence = tokenize(line);
    if sentence.len() < MIN_TOKENS {
        return Err(Rejection::TooShort);
    }
    if sentence.len() > MAX_TOKENS {
        return Err(Rejection::TooLong);
    }
    if sentence.tokens.iter().any(|t| !lexicon.contains(t)) {
        return Err(Rejection::Oov);
    }
    Ok(sentence)
}
