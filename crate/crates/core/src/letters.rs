//! One-to-many letter relations: keyboard neighbors and sound-alike letters.
//!
//! Both relations are symmetric once loaded. Files use one line per key,
//! `letter<TAB>n1,n2,...`, with `#` comments.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::ops::Deref;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::textnorm::nfc;

#[derive(Debug, Error)]
pub enum LetterMapError {
    #[error("cannot read letter map {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Syntax {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

/// Symmetric letter relation with deterministic neighbor order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LetterMap {
    neighbors: BTreeMap<char, Vec<char>>,
}

fn single_char(s: &str) -> Option<char> {
    let s = nfc(s.trim());
    let mut it = s.chars();
    match (it.next(), it.next()) {
        (Some(c), None) => Some(c),
        _ => None,
    }
}

impl LetterMap {
    /// Builds the symmetric closure of `pairs`. Self pairs are ignored.
    pub fn from_pairs<I: IntoIterator<Item = (char, char)>>(pairs: I) -> Self {
        let mut neighbors: BTreeMap<char, Vec<char>> = BTreeMap::new();
        for (a, b) in pairs {
            if a == b {
                continue;
            }
            for (x, y) in [(a, b), (b, a)] {
                let list = neighbors.entry(x).or_default();
                if !list.contains(&y) {
                    list.push(y);
                }
            }
        }
        for list in neighbors.values_mut() {
            list.sort_unstable();
        }
        Self { neighbors }
    }

    /// Every letter of a group is related to every other letter of it.
    pub fn from_groups<'a, I: IntoIterator<Item = &'a str>>(groups: I) -> Self {
        let mut pairs = Vec::new();
        for g in groups {
            let letters: Vec<char> = g.chars().filter(|c| !c.is_whitespace()).collect();
            for &a in &letters {
                for &b in &letters {
                    pairs.push((a, b));
                }
            }
        }
        Self::from_pairs(pairs)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self, LetterMapError> {
        let err = |line: usize, message: String| LetterMapError::Syntax {
            path: path.to_owned(),
            line,
            message,
        };
        let mut pairs = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let (key, rest) = line
                .split_once('\t')
                .ok_or_else(|| err(n + 1, "expected `letter<TAB>n1,n2,...`".into()))?;
            let key = single_char(key).ok_or_else(|| err(n + 1, format!("key `{key}` is not a single letter")))?;
            let mut any = false;
            for item in rest.split(',') {
                if item.trim().is_empty() {
                    continue;
                }
                let c =
                    single_char(item).ok_or_else(|| err(n + 1, format!("neighbor `{item}` is not a single letter")))?;
                if c == key {
                    return Err(err(n + 1, format!("letter `{key}` lists itself")));
                }
                pairs.push((key, c));
                any = true;
            }
            if !any {
                return Err(err(n + 1, format!("letter `{key}` has no neighbors")));
            }
        }
        Ok(Self::from_pairs(pairs))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LetterMapError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| LetterMapError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::parse(&text, path)
    }

    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (k, ns) in &self.neighbors {
            let list: Vec<String> = ns.iter().map(char::to_string).collect();
            writeln!(out, "{k}\t{}", list.join(","))?;
        }
        Ok(())
    }

    pub fn neighbors(&self, c: char) -> &[char] {
        self.neighbors.get(&c).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn is_key(&self, c: char) -> bool {
        self.neighbors.contains_key(&c)
    }

    pub fn related(&self, a: char, b: char) -> bool {
        self.neighbors(a).contains(&b)
    }

    pub fn keys(&self) -> impl Iterator<Item = char> + '_ {
        self.neighbors.keys().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    /// Every string obtained by replacing exactly one letter of `word` with
    /// one of its neighbors.
    pub fn substitutions(&self, word: &str) -> Vec<String> {
        let chars: Vec<char> = word.chars().collect();
        let mut out = Vec::new();
        for (i, &c) in chars.iter().enumerate() {
            for &n in self.neighbors(c) {
                let mut v = chars.clone();
                v[i] = n;
                out.push(v.into_iter().collect());
            }
        }
        out
    }
}

macro_rules! letter_relation {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Default, PartialEq, Eq)]
        pub struct $name(LetterMap);

        impl $name {
            pub fn new(map: LetterMap) -> Self {
                Self(map)
            }

            pub fn parse(text: &str, path: &Path) -> Result<Self, LetterMapError> {
                LetterMap::parse(text, path).map(Self)
            }

            pub fn load(path: impl AsRef<Path>) -> Result<Self, LetterMapError> {
                LetterMap::load(path).map(Self)
            }
        }

        impl Deref for $name {
            type Target = LetterMap;

            fn deref(&self) -> &LetterMap {
                &self.0
            }
        }

        impl From<LetterMap> for $name {
            fn from(map: LetterMap) -> Self {
                Self(map)
            }
        }
    };
}

letter_relation!(
    /// Physically adjacent keys.
    KeyboardAdjacency
);
letter_relation!(
    /// Letters with the same pronunciation.
    HomophoneMap
);

/// Letter rows of the Persian standard (ISIRI 9147) layout, unshifted.
pub const PERSIAN_KEYBOARD_ROWS: [&str; 3] = ["ضصثقفغعهخحجچ", "شسیبلاتنمکگ", "ظطزرذدپو"];

/// Sound-alike consonant groups of Persian.
pub const PERSIAN_HOMOPHONE_GROUPS: [&str; 6] = ["سصث", "زذضظ", "تط", "هح", "قغ", "اع"];

impl KeyboardAdjacency {
    /// Neighbors of row `r`, column `i` are `i ± 1` on the same row and
    /// `i - 1 ..= i + 1` on the rows above and below.
    pub fn from_rows(rows: &[&str]) -> Self {
        let grid: Vec<Vec<char>> = rows.iter().map(|r| r.chars().collect()).collect();
        let mut pairs = Vec::new();
        for (r, row) in grid.iter().enumerate() {
            for (i, &c) in row.iter().enumerate() {
                if i + 1 < row.len() {
                    pairs.push((c, row[i + 1]));
                }
                if let Some(below) = grid.get(r + 1) {
                    for j in i.saturating_sub(1)..=(i + 1) {
                        if let Some(&n) = below.get(j) {
                            pairs.push((c, n));
                        }
                    }
                }
            }
        }
        Self(LetterMap::from_pairs(pairs))
    }

    pub fn persian_standard() -> Self {
        Self::from_rows(&PERSIAN_KEYBOARD_ROWS)
    }
}

impl HomophoneMap {
    pub fn from_groups<'a, I: IntoIterator<Item = &'a str>>(groups: I) -> Self {
        Self(LetterMap::from_groups(groups))
    }

    pub fn persian() -> Self {
        Self::from_groups(PERSIAN_HOMOPHONE_GROUPS)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn persian_yeh_neighbors() {
        let adj = KeyboardAdjacency::persian_standard();
        let mut got: Vec<char> = adj.neighbors('ی').to_vec();
        let mut want: Vec<char> = "ربقثصسطز".chars().collect();
        got.sort_unstable();
        want.sort_unstable();
        assert_eq!(got, want);
        assert!(adj.related('ت', 'د'));
    }

    #[test]
    fn symmetric_and_irreflexive() {
        for map in [KeyboardAdjacency::persian_standard().0, HomophoneMap::persian().0] {
            for k in map.keys() {
                assert!(!map.neighbors(k).is_empty());
                assert!(!map.related(k, k));
                for &n in map.neighbors(k) {
                    assert!(map.related(n, k), "{k} -> {n}");
                }
            }
        }
    }

    #[test]
    fn parse_symmetrizes() {
        let m = LetterMap::parse("# x\na\tb,c\n", Path::new("m")).unwrap();
        assert_eq!(m.neighbors('a'), &['b', 'c']);
        assert_eq!(m.neighbors('b'), &['a']);
        assert_eq!(m.neighbors('c'), &['a']);
    }

    #[test]
    fn parse_errors_carry_line() {
        let e = LetterMap::parse("a\tb\nab\tc\n", Path::new("adj.tsv")).unwrap_err();
        assert!(e.to_string().starts_with("adj.tsv:2:"), "{e}");
        let e = LetterMap::parse("a\ta\n", Path::new("adj.tsv")).unwrap_err();
        assert!(e.to_string().contains("lists itself"));
        let e = LetterMap::parse("a\t\n", Path::new("adj.tsv")).unwrap_err();
        assert!(e.to_string().contains("no neighbors"));
        let e = LetterMap::load("/nonexistent/adj.tsv").unwrap_err();
        assert!(e.to_string().contains("/nonexistent/adj.tsv"));
    }

    #[test]
    fn shipped_data_files_match_builtins() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
        let adj = KeyboardAdjacency::load(dir.join("fa_keyboard.tsv")).unwrap();
        assert_eq!(adj, KeyboardAdjacency::persian_standard());
        let h = HomophoneMap::load(dir.join("fa_homophones.tsv")).unwrap();
        assert_eq!(h, HomophoneMap::persian());
    }

    #[test]
    fn round_trip_tsv() {
        let adj = KeyboardAdjacency::persian_standard();
        let mut buf = Vec::new();
        adj.write_tsv(&mut buf).unwrap();
        let back = KeyboardAdjacency::parse(std::str::from_utf8(&buf).unwrap(), Path::new("x")).unwrap();
        assert_eq!(back, adj);
    }
}
