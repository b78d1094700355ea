//! Dictionary storage, membership tests and edit-distance candidate queries.
//!
//! Distance-1 queries go through a deletion-neighborhood index: every word is
//! filed under its own key and under the key of each of its single-letter
//! deletions. A query probes the same set of keys for itself, so every word
//! one insertion, deletion or substitution away shares at least one bucket.
//! Buckets are keyed by hash and every hit is re-verified, so collisions cost
//! time but never correctness.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::hash::{Hash, Hasher};
use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::editdist::{adjacent_swaps, levenshtein_chars, within_distance_chars};
use crate::textnorm::nfc;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("cannot read dictionary {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("dictionary {path} is not valid UTF-8 at byte offset {offset}")]
    Utf8 { path: PathBuf, offset: usize },
    #[error("{path}:{line}: invalid frequency `{value}`")]
    Frequency { path: PathBuf, line: usize, value: String },
}

type WordId = u32;

#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    words: Vec<String>,
    chars: Vec<Box<[char]>>,
    freqs: Vec<u64>,
    ids: HashMap<String, WordId>,
    alphabet: BTreeSet<char>,
    dist1: HashMap<u64, Vec<WordId>>,
    by_len: BTreeMap<usize, Vec<WordId>>,
}

fn key_of(chars: &[char]) -> u64 {
    let mut h = DefaultHasher::new();
    chars.hash(&mut h);
    h.finish()
}

/// The query itself plus each distinct single-letter deletion.
fn neighborhood_keys(chars: &[char]) -> Vec<u64> {
    let mut keys = Vec::with_capacity(chars.len() + 1);
    keys.push(key_of(chars));
    let mut buf = Vec::with_capacity(chars.len());
    for i in 0..chars.len() {
        // deleting either letter of a run gives the same string
        if i > 0 && chars[i] == chars[i - 1] {
            continue;
        }
        buf.clear();
        buf.extend_from_slice(&chars[..i]);
        buf.extend_from_slice(&chars[i + 1..]);
        keys.push(key_of(&buf));
    }
    keys
}

impl Lexicon {
    /// Builds a lexicon from bare words, each with frequency 1.
    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self::from_entries(words.into_iter().map(|w| (w, 1)))
    }

    /// Builds a lexicon from `(word, frequency)` pairs. Words are
    /// NFC-normalized; empty words are skipped; duplicate frequencies add up.
    pub fn from_entries<I, S>(entries: I) -> Self
    where
        I: IntoIterator<Item = (S, u64)>,
        S: AsRef<str>,
    {
        let mut merged: BTreeMap<String, u64> = BTreeMap::new();
        for (w, f) in entries {
            let w = nfc(w.as_ref().trim());
            if w.is_empty() {
                continue;
            }
            *merged.entry(w).or_insert(0) += f;
        }

        let mut lex = Lexicon::default();
        for (id, (word, freq)) in merged.into_iter().enumerate() {
            let id = id as WordId;
            let chars: Box<[char]> = word.chars().collect();
            lex.alphabet.extend(chars.iter().copied());
            for key in neighborhood_keys(&chars) {
                lex.dist1.entry(key).or_default().push(id);
            }
            lex.by_len.entry(chars.len()).or_default().push(id);
            lex.ids.insert(word.clone(), id);
            lex.words.push(word);
            lex.chars.push(chars);
            lex.freqs.push(freq);
        }
        lex
    }

    /// Parses dictionary text: one `word` or `word<TAB>frequency` per line,
    /// `#` comments and blank lines ignored.
    pub fn parse(text: &str, path: &Path) -> Result<Self, LexiconError> {
        let mut entries = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let (word, freq) = match line.split_once('\t') {
                Some((w, f)) => {
                    let f = f.trim();
                    let freq = f.parse::<u64>().map_err(|_| LexiconError::Frequency {
                        path: path.to_owned(),
                        line: n + 1,
                        value: f.to_owned(),
                    })?;
                    (w, freq)
                }
                None => (line, 1),
            };
            entries.push((word, freq));
        }
        Ok(Self::from_entries(entries))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LexiconError> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|source| LexiconError::Io {
            path: path.to_owned(),
            source,
        })?;
        let text = std::str::from_utf8(&bytes).map_err(|e| LexiconError::Utf8 {
            path: path.to_owned(),
            offset: e.valid_up_to(),
        })?;
        let lex = Self::parse(text, path)?;
        log::info!("loaded {} words from {}", lex.len(), path.display());
        Ok(lex)
    }

    /// Writes the normalized dictionary as sorted `word<TAB>frequency` lines.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (w, f) in self.words.iter().zip(&self.freqs) {
            writeln!(out, "{w}\t{f}")?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Words in ascending order.
    pub fn words(&self) -> impl ExactSizeIterator<Item = &str> + '_ {
        self.words.iter().map(String::as_str)
    }

    /// The `i`-th word in ascending order.
    pub fn word(&self, i: usize) -> &str {
        &self.words[i]
    }

    /// Position of `word` in ascending order.
    pub fn index_of(&self, word: &str) -> Option<usize> {
        match self.ids.get(word) {
            Some(id) => Some(*id as usize),
            None => self.ids.get(&nfc(word)).map(|id| *id as usize),
        }
    }

    pub fn alphabet(&self) -> &BTreeSet<char> {
        &self.alphabet
    }

    pub fn contains(&self, word: &str) -> bool {
        self.ids.contains_key(word) || self.ids.contains_key(&nfc(word))
    }

    pub fn frequency(&self, word: &str) -> Option<u64> {
        let id = match self.ids.get(word) {
            Some(id) => *id,
            None => *self.ids.get(&nfc(word))?,
        };
        Some(self.freqs[id as usize])
    }

    /// All lexicon words at Levenshtein distance exactly 1 from `word`.
    pub fn candidates_distance1(&self, word: &str) -> BTreeSet<String> {
        let q: Vec<char> = nfc(word).chars().collect();
        let mut out = BTreeSet::new();
        for key in neighborhood_keys(&q) {
            let Some(bucket) = self.dist1.get(&key) else {
                continue;
            };
            for &id in bucket {
                let cand = &self.chars[id as usize];
                if cand.len().abs_diff(q.len()) <= 1 && levenshtein_chars(cand, &q) == 1 {
                    out.insert(self.words[id as usize].clone());
                }
            }
        }
        out
    }

    /// All lexicon words reachable from `word` by one adjacent transposition.
    pub fn candidates_adjacent_swap(&self, word: &str) -> BTreeSet<String> {
        adjacent_swaps(&nfc(word))
            .into_iter()
            .filter(|v| self.ids.contains_key(v))
            .collect()
    }

    /// All lexicon words within Levenshtein distance `k` of `word`, the word
    /// itself included when present. Linear in the number of words whose
    /// length is within `k` of the query.
    pub fn candidates_within(&self, word: &str, k: usize) -> BTreeSet<String> {
        let q: Vec<char> = nfc(word).chars().collect();
        let lo = q.len().saturating_sub(k);
        let hi = q.len() + k;
        self.by_len
            .range(lo..=hi)
            .flat_map(|(_, ids)| ids.iter())
            .filter(|&&id| within_distance_chars(&self.chars[id as usize], &q, k))
            .map(|&id| self.words[id as usize].clone())
            .collect()
    }
}
