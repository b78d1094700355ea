//! Precomputed real-word confusion sets.
//!
//! For every dictionary word the index lists the other dictionary words one
//! adjacent transposition, one keyboard-neighbor substitution or one
//! sound-alike substitution away. Sets are ordered by Levenshtein distance to
//! the key, then lexicographically.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::editdist::{adjacent_swaps, is_adjacent_transposition_chars, levenshtein};
use crate::errorgen::ErrorType;
use crate::letters::{HomophoneMap, KeyboardAdjacency};
use crate::lexicon::Lexicon;
use crate::textnorm::nfc;

const MAGIC: &[u8; 8] = b"MSPLCONF";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfusionError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: not a confusion index (bad magic)")]
    BadMagic { path: PathBuf },
    #[error("{path}: unsupported format version {version}")]
    Version { path: PathBuf, version: u32 },
    #[error("{path}: {message}")]
    Corrupt { path: PathBuf, message: String },
    #[error("word `{0}` contains a tab or comma and cannot be written as TSV")]
    Unrepresentable(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfusionIndex {
    table: BTreeMap<String, Vec<String>>,
}

/// Which generator relations connect two words. A pair can satisfy more than
/// one (a keyboard neighbor that is also a sound-alike).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Relation {
    pub transposition: bool,
    pub keyboard: bool,
    pub homophone: bool,
}

impl Relation {
    pub fn any(self) -> bool {
        self.transposition || self.keyboard || self.homophone
    }

    /// Most specific error type of the relation: homophone, then keyboard,
    /// then substitution.
    pub fn primary_type(self) -> Option<ErrorType> {
        if self.homophone {
            Some(ErrorType::Homophone)
        } else if self.keyboard {
            Some(ErrorType::Keyboard)
        } else if self.transposition {
            Some(ErrorType::Substitution)
        } else {
            None
        }
    }
}

/// Classifies the pair `(a, b)` against the three generator relations.
pub fn relation(a: &str, b: &str, adj: &KeyboardAdjacency, hmap: &HomophoneMap) -> Relation {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut rel = Relation::default();
    if a.len() != b.len() {
        return rel;
    }
    rel.transposition = is_adjacent_transposition_chars(&a, &b);
    let mut diff = a.iter().zip(&b).filter(|(x, y)| x != y);
    if let (Some((&x, &y)), None) = (diff.next(), diff.next()) {
        rel.keyboard = adj.related(x, y);
        rel.homophone = hmap.related(x, y);
    }
    rel
}

fn confusables(word: &str, lexicon: &Lexicon, adj: &KeyboardAdjacency, hmap: &HomophoneMap) -> Vec<String> {
    let set: BTreeSet<String> = adjacent_swaps(word)
        .into_iter()
        .chain(adj.substitutions(word))
        .chain(hmap.substitutions(word))
        .filter(|v| v != word && lexicon.contains(v))
        .collect();
    let mut out: Vec<(usize, String)> = set.into_iter().map(|v| (levenshtein(word, &v), v)).collect();
    out.sort();
    out.into_iter().map(|(_, v)| v).collect()
}

impl ConfusionIndex {
    pub fn build(lexicon: &Lexicon, adj: &KeyboardAdjacency, hmap: &HomophoneMap) -> Self {
        let words: Vec<&str> = lexicon.words().collect();
        #[cfg(feature = "parallel")]
        let sets: Vec<Vec<String>> = {
            use rayon::prelude::*;
            words.par_iter().map(|w| confusables(w, lexicon, adj, hmap)).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let sets: Vec<Vec<String>> = words.iter().map(|w| confusables(w, lexicon, adj, hmap)).collect();
        let table = words.into_iter().map(str::to_owned).zip(sets).collect();
        Self { table }
    }

    pub fn from_table(table: BTreeMap<String, Vec<String>>) -> Self {
        Self { table }
    }

    /// The confusion set of `word`; empty when the word is not a key.
    pub fn confusion_set(&self, word: &str) -> &[String] {
        if let Some(v) = self.table.get(word) {
            return v;
        }
        self.table.get(&nfc(word)).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[String])> + '_ {
        self.table.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Number of (key, value) pairs.
    pub fn pair_count(&self) -> usize {
        self.table.values().map(Vec::len).sum()
    }

    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<(), ConfusionError> {
        let bad = |w: &str| w.contains('\t') || w.contains(',') || w.contains('\n');
        for (k, vs) in &self.table {
            if bad(k) {
                return Err(ConfusionError::Unrepresentable(k.clone()));
            }
            if let Some(v) = vs.iter().find(|v| bad(v)) {
                return Err(ConfusionError::Unrepresentable(v.clone()));
            }
            writeln!(out, "{k}\t{}", vs.join(",")).map_err(|source| ConfusionError::Io {
                path: PathBuf::from("<tsv>"),
                source,
            })?;
        }
        Ok(())
    }

    pub fn parse_tsv(text: &str, path: &Path) -> Result<Self, ConfusionError> {
        let mut table = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let (k, rest) = line.split_once('\t').ok_or_else(|| ConfusionError::Corrupt {
                path: path.to_owned(),
                message: format!("line {}: missing tab", n + 1),
            })?;
            let vs = rest.split(',').filter(|s| !s.is_empty()).map(str::to_owned).collect();
            table.insert(k.to_owned(), vs);
        }
        Ok(Self { table })
    }

    /// Binary layout, little endian: magic, `u32` version, `u64` key count,
    /// then per key a length-prefixed word, `u32` value count and
    /// length-prefixed values.
    pub fn write_binary<W: Write>(&self, out: W) -> io::Result<()> {
        let mut out = BufWriter::new(out);
        out.write_all(MAGIC)?;
        out.write_all(&FORMAT_VERSION.to_le_bytes())?;
        out.write_all(&(self.table.len() as u64).to_le_bytes())?;
        let put = |out: &mut BufWriter<W>, s: &str| -> io::Result<()> {
            out.write_all(&(s.len() as u32).to_le_bytes())?;
            out.write_all(s.as_bytes())
        };
        for (k, vs) in &self.table {
            put(&mut out, k)?;
            out.write_all(&(vs.len() as u32).to_le_bytes())?;
            for v in vs {
                put(&mut out, v)?;
            }
        }
        out.flush()
    }

    pub fn read_binary(bytes: &[u8], path: &Path) -> Result<Self, ConfusionError> {
        let corrupt = |message: &str| ConfusionError::Corrupt {
            path: path.to_owned(),
            message: message.to_owned(),
        };
        let mut r = bytes;
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(|_| corrupt("truncated header"))?;
        if &magic != MAGIC {
            return Err(ConfusionError::BadMagic { path: path.to_owned() });
        }
        let mut u32buf = [0u8; 4];
        let mut u64buf = [0u8; 8];
        r.read_exact(&mut u32buf).map_err(|_| corrupt("truncated header"))?;
        let version = u32::from_le_bytes(u32buf);
        if version != FORMAT_VERSION {
            return Err(ConfusionError::Version {
                path: path.to_owned(),
                version,
            });
        }
        r.read_exact(&mut u64buf).map_err(|_| corrupt("truncated header"))?;
        let n = u64::from_le_bytes(u64buf);

        fn take_u32(r: &mut &[u8]) -> Option<u32> {
            let (head, tail) = r.split_first_chunk::<4>()?;
            *r = tail;
            Some(u32::from_le_bytes(*head))
        }
        fn take_str(r: &mut &[u8]) -> Option<String> {
            let len = take_u32(r)? as usize;
            if r.len() < len {
                return None;
            }
            let (s, tail) = r.split_at(len);
            *r = tail;
            String::from_utf8(s.to_vec()).ok()
        }

        let mut table = BTreeMap::new();
        for _ in 0..n {
            let k = take_str(&mut r).ok_or_else(|| corrupt("truncated or invalid key"))?;
            let m = take_u32(&mut r).ok_or_else(|| corrupt("truncated value count"))?;
            let mut vs = Vec::with_capacity(m as usize);
            for _ in 0..m {
                vs.push(take_str(&mut r).ok_or_else(|| corrupt("truncated or invalid value"))?);
            }
            table.insert(k, vs);
        }
        if !r.is_empty() {
            return Err(corrupt("trailing bytes"));
        }
        Ok(Self { table })
    }

    /// Loads either format, detected by the magic header.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfusionError> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|source| ConfusionError::Io {
            path: path.to_owned(),
            source,
        })?;
        if bytes.starts_with(MAGIC) {
            Self::read_binary(&bytes, path)
        } else {
            let text = String::from_utf8(bytes).map_err(|e| ConfusionError::Corrupt {
                path: path.to_owned(),
                message: format!("invalid UTF-8 at byte {}", e.utf8_error().valid_up_to()),
            })?;
            Self::parse_tsv(&text, path)
        }
    }
}
