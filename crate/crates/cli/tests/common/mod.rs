//! Synthetic Persian-script fixtures: a dense random dictionary and a corpus
//! drawn from a small successor grammar so that context carries signal.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

use misspell::errorgen::substream;
use misspell_cli::{run, Cli};

/// Letters covering every homophone group and most keyboard rows.
pub const LETTERS: &str = "سصثزذتطهحقغابدرمنوکلی";

pub fn rng(seed: u64) -> ChaCha8Rng {
    substream(seed, 0x7E57, 0)
}

pub fn random_word(rng: &mut ChaCha8Rng, alphabet: &[char], len: usize) -> String {
    (0..len)
        .map(|_| alphabet[rng.random_range(0..alphabet.len())])
        .collect()
}

/// `n3` distinct three-letter and `n4` distinct four-letter words, sorted.
pub fn dictionary(seed: u64, n3: usize, n4: usize) -> Vec<String> {
    let alphabet: Vec<char> = LETTERS.chars().collect();
    let mut rng = rng(seed);
    let mut out = BTreeSet::new();
    for (len, n) in [(3, n3), (4, n4)] {
        let mut drawn = BTreeSet::new();
        while drawn.len() < n {
            drawn.insert(random_word(&mut rng, &alphabet, len));
        }
        out.extend(drawn);
    }
    out.into_iter().collect()
}

/// Every word is followed by one of three fixed successors.
pub struct Grammar {
    pub words: Vec<String>,
    next: Vec<[usize; 3]>,
}

impl Grammar {
    pub fn new(dictionary: &[String], size: usize, seed: u64) -> Self {
        let mut rng = rng(seed ^ 0x6A);
        let mut picked = BTreeSet::new();
        while picked.len() < size.min(dictionary.len()) {
            picked.insert(rng.random_range(0..dictionary.len()));
        }
        let words: Vec<String> = picked.into_iter().map(|i| dictionary[i].clone()).collect();
        let n = words.len();
        let next = (0..n)
            .map(|_| [rng.random_range(0..n), rng.random_range(0..n), rng.random_range(0..n)])
            .collect();
        Self { words, next }
    }

    pub fn sentence(&self, rng: &mut ChaCha8Rng) -> Vec<String> {
        let len = rng.random_range(6..=12);
        let mut w = rng.random_range(0..self.words.len());
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            out.push(self.words[w].clone());
            w = self.next[w][rng.random_range(0..3)];
        }
        out
    }

    pub fn lines(&self, n: usize, seed: u64) -> Vec<String> {
        let mut rng = rng(seed);
        (0..n).map(|_| self.sentence(&mut rng).join(" ")).collect()
    }
}

pub fn write_lines(path: &Path, lines: &[String]) {
    let mut text = lines.join("\n");
    text.push('\n');
    fs::write(path, text).unwrap();
}

pub fn cli(args: &[&str]) -> Result<(), misspell_cli::CliError> {
    use clap::Parser;
    let mut argv = vec!["misspell"];
    argv.extend_from_slice(args);
    run(Cli::try_parse_from(argv).expect("arguments parse"))
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Files for one experiment: dictionary, evaluation corpus, LM corpus and a
/// built index directory.
pub struct Fixture {
    pub dir: TempDir,
    pub dictionary: PathBuf,
    pub corpus: PathBuf,
    pub lm_corpus: PathBuf,
    pub index: PathBuf,
    pub words: Vec<String>,
}

impl Fixture {
    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

pub fn fixture(corpus_lines: usize, lm_lines: usize, seed: u64) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let words = dictionary(seed, 3000, 3000);
    let grammar = Grammar::new(&words, 1500, seed);
    let dictionary = dir.path().join("dict.txt");
    let corpus = dir.path().join("corpus.txt");
    let lm_corpus = dir.path().join("lm.txt");
    let index = dir.path().join("index");
    write_lines(&dictionary, &words);
    write_lines(&corpus, &grammar.lines(corpus_lines, seed + 1));
    write_lines(&lm_corpus, &grammar.lines(lm_lines, seed + 2));
    cli(&["build", "--dictionary", s(&dictionary), "--out", s(&index)]).unwrap();
    Fixture {
        dir,
        dictionary,
        corpus,
        lm_corpus,
        index,
        words,
    }
}
