//! Synthetic misspelling generation and labeled dataset construction.
//!
//! Three variant generators (keyboard neighbor, adjacent swap, sound-alike
//! letter) feed a per-sentence corruption policy that injects at most one
//! error per record. Every record carries its own deterministic random
//! substream so datasets are bit-reproducible regardless of thread count.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::confusion::{relation, ConfusionIndex};
use crate::editdist::adjacent_swaps;
use crate::letters::{HomophoneMap, KeyboardAdjacency};
use crate::lexicon::Lexicon;
use crate::textnorm::{normalize_zwnj, prune_line, Rejection, Sentence, ZwnjMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Real,
    Nonreal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorType {
    Keyboard,
    Substitution,
    Homophone,
}

impl Category {
    pub const ALL: [Category; 2] = [Category::Real, Category::Nonreal];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Real => "real",
            Self::Nonreal => "nonreal",
        }
    }
}

impl ErrorType {
    pub const ALL: [ErrorType; 3] = [ErrorType::Keyboard, ErrorType::Substitution, ErrorType::Homophone];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Keyboard => "keyboard",
            Self::Substitution => "substitution",
            Self::Homophone => "homophone",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for ErrorType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "real" => Ok(Self::Real),
            "nonreal" => Ok(Self::Nonreal),
            _ => Err(format!("unknown category `{s}`")),
        }
    }
}

impl FromStr for ErrorType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "keyboard" => Ok(Self::Keyboard),
            "substitution" => Ok(Self::Substitution),
            "homophone" => Ok(Self::Homophone),
            _ => Err(format!("unknown error type `{s}`")),
        }
    }
}

/// A (category, error type) evaluation class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ErrorClass {
    pub category: Category,
    pub etype: ErrorType,
}

impl ErrorClass {
    pub const fn new(category: Category, etype: ErrorType) -> Self {
        Self { category, etype }
    }

    /// The six error classes, real before non-real.
    pub fn all() -> impl Iterator<Item = ErrorClass> {
        Category::ALL
            .into_iter()
            .flat_map(|c| ErrorType::ALL.into_iter().map(move |t| ErrorClass::new(c, t)))
    }
}

impl fmt::Display for ErrorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.category, self.etype)
    }
}

pub fn keyboard_variants(word: &str, adj: &KeyboardAdjacency) -> BTreeSet<String> {
    adj.substitutions(word).into_iter().filter(|v| v != word).collect()
}

pub fn swap_variants(word: &str) -> BTreeSet<String> {
    adjacent_swaps(word).into_iter().collect()
}

pub fn homophone_variants(word: &str, hmap: &HomophoneMap) -> BTreeSet<String> {
    hmap.substitutions(word).into_iter().filter(|v| v != word).collect()
}

pub fn classify_variant(variant: &str, lexicon: &Lexicon) -> Category {
    if lexicon.contains(variant) {
        Category::Real
    } else {
        Category::Nonreal
    }
}

/// The single corruption carried by a record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InjectedError {
    pub index: usize,
    pub original: String,
    pub corrupted: String,
    pub category: Category,
    pub etype: ErrorType,
}

impl InjectedError {
    pub fn class(&self) -> ErrorClass {
        ErrorClass::new(self.category, self.etype)
    }
}

/// One dataset line: the (possibly corrupted) sentence and its label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErrorRecord {
    pub sentence_id: u64,
    pub tokens: Vec<String>,
    pub error: Option<InjectedError>,
}

impl ErrorRecord {
    /// Tokens with the corruption undone.
    pub fn original_tokens(&self) -> Vec<String> {
        let mut t = self.tokens.clone();
        if let Some(e) = &self.error {
            t[e.index] = e.original.clone();
        }
        t
    }

    pub fn error_index(&self) -> Option<usize> {
        self.error.as_ref().map(|e| e.index)
    }

    /// `sentence_id, corrupted_sentence, error_index, original_word,
    /// corrupted_word, category, etype`, tab separated.
    pub fn to_tsv_line(&self) -> String {
        let sentence = self.tokens.join(" ");
        match &self.error {
            Some(e) => format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                self.sentence_id, sentence, e.index, e.original, e.corrupted, e.category, e.etype
            ),
            None => format!("{}\t{}\t-1\t\t\tnone\tnone", self.sentence_id, sentence),
        }
    }

    pub fn from_tsv_line(line: &str) -> Result<Self, String> {
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 7 {
            return Err(format!("expected 7 tab-separated fields, found {}", f.len()));
        }
        let sentence_id: u64 = f[0].parse().map_err(|_| format!("bad sentence_id `{}`", f[0]))?;
        let tokens: Vec<String> = f[1].split(' ').filter(|t| !t.is_empty()).map(str::to_owned).collect();
        let index: i64 = f[2].parse().map_err(|_| format!("bad error_index `{}`", f[2]))?;
        if index < 0 {
            if index != -1 || !f[3].is_empty() || !f[4].is_empty() || f[5] != "none" || f[6] != "none" {
                return Err("unlabeled record must have index -1, empty words and none/none".into());
            }
            return Ok(Self {
                sentence_id,
                tokens,
                error: None,
            });
        }
        let index = index as usize;
        if index >= tokens.len() {
            return Err(format!("error_index {index} out of range for {} tokens", tokens.len()));
        }
        if tokens[index] != f[4] {
            return Err(format!("token {index} is `{}`, label says `{}`", tokens[index], f[4]));
        }
        Ok(Self {
            sentence_id,
            tokens,
            error: Some(InjectedError {
                index,
                original: f[3].to_owned(),
                corrupted: f[4].to_owned(),
                category: f[5].parse()?,
                etype: f[6].parse()?,
            }),
        })
    }
}

#[derive(Debug, Error)]
pub enum RecordsError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn write_records<W: Write>(records: &[ErrorRecord], mut out: W) -> io::Result<()> {
    for r in records {
        writeln!(out, "{}", r.to_tsv_line())?;
    }
    Ok(())
}

pub fn read_records<R: BufRead>(input: R) -> Result<Vec<ErrorRecord>, RecordsError> {
    let mut out = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        out.push(ErrorRecord::from_tsv_line(&line).map_err(|message| RecordsError::Parse { line: n + 1, message })?);
    }
    Ok(out)
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("{name} = {value} is not a probability in [0, 1]")]
    Probability { name: &'static str, value: f64 },
    #[error("{name} sums to {sum}, expected 1")]
    Split { name: &'static str, sum: f64 },
    #[error("repetitions must be at least 1")]
    Repetitions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorruptionConfig {
    pub p_unchanged: f64,
    pub p_homophone_real: f64,
    pub p_real_branch: f64,
    /// keyboard, substitution
    pub real_split: [f64; 2],
    /// keyboard, substitution, homophone
    pub nonreal_split: [f64; 3],
    pub repetitions: u32,
    pub seed: u64,
}

impl Default for CorruptionConfig {
    fn default() -> Self {
        Self {
            p_unchanged: 0.5,
            p_homophone_real: 0.8,
            p_real_branch: 0.5,
            real_split: [0.5, 0.5],
            nonreal_split: [1.0 / 3.0; 3],
            repetitions: 1,
            seed: 0,
        }
    }
}

impl CorruptionConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let probs = [
            ("p_unchanged", self.p_unchanged),
            ("p_homophone_real", self.p_homophone_real),
            ("p_real_branch", self.p_real_branch),
        ];
        let splits = self
            .real_split
            .iter()
            .map(|&v| ("real_split", v))
            .chain(self.nonreal_split.iter().map(|&v| ("nonreal_split", v)));
        for (name, value) in probs.into_iter().chain(splits) {
            if !(0.0..=1.0).contains(&value) {
                return Err(ConfigError::Probability { name, value });
            }
        }
        let real: f64 = self.real_split.iter().sum();
        if (real - 1.0).abs() > 1e-9 {
            return Err(ConfigError::Split {
                name: "real_split",
                sum: real,
            });
        }
        let nonreal: f64 = self.nonreal_split.iter().sum();
        if (nonreal - 1.0).abs() > 1e-9 {
            return Err(ConfigError::Split {
                name: "nonreal_split",
                sum: nonreal,
            });
        }
        if self.repetitions == 0 {
            return Err(ConfigError::Repetitions);
        }
        Ok(())
    }
}

/// Read-only inputs shared by every generator call.
#[derive(Debug, Clone, Copy)]
pub struct GenContext<'a> {
    pub lexicon: &'a Lexicon,
    pub adjacency: &'a KeyboardAdjacency,
    pub homophones: &'a HomophoneMap,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Independent generator for one (seed, stream, sub-stream) triple.
pub fn substream(seed: u64, stream: u64, sub: u64) -> ChaCha8Rng {
    let s = splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ sub);
    ChaCha8Rng::seed_from_u64(s)
}

/// Per-token variant sets split by lexicon membership.
struct TokenVariants {
    sets: BTreeMap<ErrorClass, BTreeSet<String>>,
}

impl TokenVariants {
    fn new(word: &str, ctx: &GenContext<'_>) -> Self {
        let mut sets: BTreeMap<ErrorClass, BTreeSet<String>> = BTreeMap::new();
        let gens = [
            (ErrorType::Keyboard, keyboard_variants(word, ctx.adjacency)),
            (ErrorType::Substitution, swap_variants(word)),
            (ErrorType::Homophone, homophone_variants(word, ctx.homophones)),
        ];
        for (etype, variants) in gens {
            for v in variants {
                let class = ErrorClass::new(classify_variant(&v, ctx.lexicon), etype);
                sets.entry(class).or_default().insert(v);
            }
        }
        Self { sets }
    }

    fn get(&self, class: ErrorClass) -> Option<&BTreeSet<String>> {
        self.sets.get(&class).filter(|s| !s.is_empty())
    }
}

fn pick_split(u: f64, split: &[f64]) -> usize {
    let mut acc = 0.0;
    for (i, p) in split.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    split.len() - 1
}

/// Why a corrupting draw ended with an unchanged record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unchanged {
    Drawn,
    Infeasible,
}

/// Applies the corruption policy to one pruned sentence.
///
/// With probability `p_unchanged` the sentence is left alone. Otherwise, if
/// some word has an in-lexicon sound-alike variant, a real-word homophone
/// error is injected with probability `p_homophone_real`. Failing that, the
/// real-word branch (keyboard or swap, per `real_split`) is taken with
/// probability `p_real_branch` and the non-real branch (per `nonreal_split`)
/// otherwise. An infeasible sub-branch falls through to the remaining
/// sub-branches of the same category in keyboard, substitution, homophone
/// order, then to those of the other category, then to unchanged.
pub fn inject_error(
    sentence_id: u64,
    sentence: &Sentence,
    config: &CorruptionConfig,
    ctx: &GenContext<'_>,
    rng: &mut impl Rng,
) -> (ErrorRecord, Option<Unchanged>) {
    let unchanged = |why| {
        (
            ErrorRecord {
                sentence_id,
                tokens: sentence.tokens.clone(),
                error: None,
            },
            Some(why),
        )
    };
    if rng.random::<f64>() < config.p_unchanged {
        return unchanged(Unchanged::Drawn);
    }
    let variants: Vec<TokenVariants> = sentence.tokens.iter().map(|t| TokenVariants::new(t, ctx)).collect();
    let eligible = |class: ErrorClass| -> Vec<usize> {
        (0..variants.len())
            .filter(|&i| variants[i].get(class).is_some())
            .collect()
    };

    let real_homophone = ErrorClass::new(Category::Real, ErrorType::Homophone);
    let mut order: Vec<ErrorClass> = Vec::with_capacity(5);
    if !eligible(real_homophone).is_empty() && rng.random::<f64>() < config.p_homophone_real {
        order.push(real_homophone);
    } else {
        use Category::*;
        use ErrorType::*;
        let real = [Keyboard, Substitution];
        let nonreal = [Keyboard, Substitution, Homophone];
        let (first, first_types, second, second_types): (_, &[ErrorType], _, &[ErrorType]) =
            if rng.random::<f64>() < config.p_real_branch {
                let chosen = real[pick_split(rng.random(), &config.real_split)];
                order.push(ErrorClass::new(Real, chosen));
                (Real, &real, Nonreal, &nonreal)
            } else {
                let chosen = nonreal[pick_split(rng.random(), &config.nonreal_split)];
                order.push(ErrorClass::new(Nonreal, chosen));
                (Nonreal, &nonreal, Real, &real)
            };
        for &t in first_types {
            let c = ErrorClass::new(first, t);
            if !order.contains(&c) {
                order.push(c);
            }
        }
        order.extend(second_types.iter().map(|&t| ErrorClass::new(second, t)));
    }

    for class in order {
        let positions = eligible(class);
        if positions.is_empty() {
            continue;
        }
        let index = positions[rng.random_range(0..positions.len())];
        let set = variants[index].get(class).expect("eligible");
        let corrupted = set
            .iter()
            .nth(rng.random_range(0..set.len()))
            .expect("in range")
            .clone();
        let mut tokens = sentence.tokens.clone();
        let original = std::mem::replace(&mut tokens[index], corrupted.clone());
        return (
            ErrorRecord {
                sentence_id,
                tokens,
                error: Some(InjectedError {
                    index,
                    original,
                    corrupted,
                    category: class.category,
                    etype: class.etype,
                }),
            },
            None,
        );
    }
    log::debug!("sentence {sentence_id}: no feasible corruption, left unchanged");
    unchanged(Unchanged::Infeasible)
}

/// Counts per (category, error type) cell, unchanged records included.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub total: u64,
    pub unchanged: u64,
    pub per_class: BTreeMap<String, u64>,
    pub pruning: PruneStats,
    pub infeasible: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PruneStats {
    pub lines: u64,
    pub accepted: u64,
    pub oov: u64,
    pub too_short: u64,
    pub too_long: u64,
}

impl DatasetStats {
    pub fn from_records(records: &[ErrorRecord]) -> Self {
        let mut s = DatasetStats::default();
        for c in ErrorClass::all() {
            s.per_class.insert(c.to_string(), 0);
        }
        for r in records {
            s.total += 1;
            match &r.error {
                Some(e) => *s.per_class.entry(e.class().to_string()).or_insert(0) += 1,
                None => s.unchanged += 1,
            }
        }
        s
    }

    pub fn count(&self, class: ErrorClass) -> u64 {
        self.per_class.get(&class.to_string()).copied().unwrap_or(0)
    }

    /// `category<TAB>etype<TAB>count` rows: the seven cells, the total, then
    /// pruning counters.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "category\tetype\tcount")?;
        writeln!(out, "none\tnone\t{}", self.unchanged)?;
        for c in ErrorClass::all() {
            writeln!(out, "{}\t{}\t{}", c.category, c.etype, self.count(c))?;
        }
        writeln!(out, "total\tall\t{}", self.total)?;
        writeln!(out, "infeasible\tnone\t{}", self.infeasible)?;
        let p = &self.pruning;
        writeln!(out, "prune\tlines\t{}", p.lines)?;
        writeln!(out, "prune\taccepted\t{}", p.accepted)?;
        writeln!(out, "prune\toov\t{}", p.oov)?;
        writeln!(out, "prune\ttoo_short\t{}", p.too_short)?;
        writeln!(out, "prune\ttoo_long\t{}", p.too_long)?;
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("no corpus line survived pruning ({lines} lines read)")]
    EmptyCorpus { lines: u64 },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("reading corpus: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub records: Vec<ErrorRecord>,
    pub stats: DatasetStats,
    /// 1-based line number and reason of every rejected corpus line.
    pub rejected: Vec<(u64, Rejection)>,
}

/// Prunes `lines` and runs the corruption policy `config.repetitions` times
/// over the surviving sentences, appending each pass. Record ids are
/// sequential in output order; the random substream of each record is keyed
/// by (seed, pruned-sentence position, repetition).
pub fn build_dataset<I>(
    lines: I,
    config: &CorruptionConfig,
    ctx: &GenContext<'_>,
    zwnj: ZwnjMode,
) -> Result<Dataset, DatasetError>
where
    I: IntoIterator<Item = io::Result<String>>,
{
    config.validate()?;
    let mut pruning = PruneStats::default();
    let mut rejected = Vec::new();
    let mut sentences = Vec::new();
    for (n, line) in lines.into_iter().enumerate() {
        let line = line?;
        pruning.lines += 1;
        let line = normalize_zwnj(&line, zwnj);
        match prune_line(&line, ctx.lexicon) {
            Ok(s) => {
                pruning.accepted += 1;
                sentences.push(s);
            }
            Err(reason) => {
                match reason {
                    Rejection::Oov => pruning.oov += 1,
                    Rejection::TooShort => pruning.too_short += 1,
                    Rejection::TooLong => pruning.too_long += 1,
                }
                rejected.push((n as u64 + 1, reason));
            }
        }
    }
    if sentences.is_empty() {
        return Err(DatasetError::EmptyCorpus { lines: pruning.lines });
    }

    let n = sentences.len() as u64;
    let jobs: Vec<(u64, u64)> = (0..u64::from(config.repetitions))
        .flat_map(|rep| (0..n).map(move |s| (rep, s)))
        .collect();
    let run = |&(rep, s): &(u64, u64)| {
        let mut rng = substream(config.seed, s, rep);
        inject_error(rep * n + s, &sentences[s as usize], config, ctx, &mut rng)
    };
    #[cfg(feature = "parallel")]
    let out: Vec<(ErrorRecord, Option<Unchanged>)> = {
        use rayon::prelude::*;
        jobs.par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let out: Vec<(ErrorRecord, Option<Unchanged>)> = jobs.iter().map(run).collect();

    let infeasible = out.iter().filter(|(_, u)| *u == Some(Unchanged::Infeasible)).count() as u64;
    let records: Vec<ErrorRecord> = out.into_iter().map(|(r, _)| r).collect();
    let mut stats = DatasetStats::from_records(&records);
    stats.pruning = pruning;
    stats.infeasible = infeasible;
    Ok(Dataset {
        records,
        stats,
        rejected,
    })
}

/// Keeps every corrupted record and every unchanged record with at least one
/// token whose confusion set is non-empty.
pub fn eval_retention_filter(records: Vec<ErrorRecord>, confusion: &ConfusionIndex) -> Vec<ErrorRecord> {
    records
        .into_iter()
        .filter(|r| r.error.is_some() || r.tokens.iter().any(|t| !confusion.confusion_set(t).is_empty()))
        .collect()
}

/// Position judged for a record and the class it is counted under.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalSite {
    pub index: usize,
    pub class: ErrorClass,
    pub has_error: bool,
}

/// The labeled error position of a corrupted record, or for an unchanged
/// record the first token with a non-empty confusion set, classed as a
/// real-word probe of the most specific relation it has to any confusable
/// (homophone, then keyboard, then substitution).
pub fn eval_site(
    record: &ErrorRecord,
    confusion: &ConfusionIndex,
    adj: &KeyboardAdjacency,
    hmap: &HomophoneMap,
) -> Option<EvalSite> {
    if let Some(e) = &record.error {
        return Some(EvalSite {
            index: e.index,
            class: e.class(),
            has_error: true,
        });
    }
    record.tokens.iter().enumerate().find_map(|(i, t)| {
        let set = confusion.confusion_set(t);
        let etype = set
            .iter()
            .filter_map(|c| relation(t, c, adj, hmap).primary_type())
            .max_by_key(|t| match t {
                ErrorType::Homophone => 2,
                ErrorType::Keyboard => 1,
                ErrorType::Substitution => 0,
            })?;
        Some(EvalSite {
            index: i,
            class: ErrorClass::new(Category::Real, etype),
            has_error: false,
        })
    })
}
