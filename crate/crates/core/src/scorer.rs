//! Masked-language-model scoring contract and its implementations.
//!
//! A [`Scorer`] receives a sentence with one slot masked plus an explicit
//! candidate list and returns one probability per candidate, in candidate
//! order. Implementations never substitute, drop or add words.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::errorgen::ErrorRecord;
use crate::lexicon::Lexicon;

#[cfg(feature = "remote")]
mod remote;
#[cfg(feature = "remote")]
pub use remote::{RemoteConfig, RemoteScorer};

/// Placeholder written into the masked slot.
pub const MASK_TOKEN: &str = "[MASK]";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("mask index {index} out of range for {len} tokens")]
    MaskOutOfRange { index: usize, len: usize },
    #[error("candidate list is empty")]
    NoCandidates,
    #[error("candidate `{0}` appears more than once")]
    Duplicate(String),
}

/// A sentence with one token replaced by [`MASK_TOKEN`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct MaskedSentence {
    pub tokens: Vec<String>,
    pub mask_index: usize,
}

impl MaskedSentence {
    pub fn new(tokens: &[String], index: usize) -> Result<Self, QueryError> {
        if index >= tokens.len() {
            return Err(QueryError::MaskOutOfRange {
                index,
                len: tokens.len(),
            });
        }
        let mut tokens = tokens.to_vec();
        tokens[index] = MASK_TOKEN.to_owned();
        Ok(Self {
            tokens,
            mask_index: index,
        })
    }

    pub fn with_candidates(self, candidates: Vec<String>) -> Result<MaskedQuery, QueryError> {
        MaskedQuery::new(self, candidates)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MaskedQuery {
    #[serde(flatten)]
    pub masked: MaskedSentence,
    pub candidates: Vec<String>,
}

impl MaskedQuery {
    pub fn new(masked: MaskedSentence, candidates: Vec<String>) -> Result<Self, QueryError> {
        if candidates.is_empty() {
            return Err(QueryError::NoCandidates);
        }
        let mut seen = std::collections::HashSet::with_capacity(candidates.len());
        for c in &candidates {
            if !seen.insert(c.as_str()) {
                return Err(QueryError::Duplicate(c.clone()));
            }
        }
        Ok(Self { masked, candidates })
    }

    pub fn tokens(&self) -> &[String] {
        &self.masked.tokens
    }

    pub fn mask_index(&self) -> usize {
        self.masked.mask_index
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub word: String,
    pub score: f64,
}

/// Ways a backend can break the scoring contract.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ContractViolation {
    #[error("expected {expected} scores, got {got}")]
    Length { expected: usize, got: usize },
    #[error("score {value} at position {index} is not finite")]
    NotFinite { index: usize, value: f64 },
    #[error("score {value} at position {index} is outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },
    #[error("word at position {index} is not a candidate")]
    UnknownWord { index: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoreError {
    #[error("scorer timed out: {0}")]
    Timeout(String),
    #[error("scorer connection refused: {0}")]
    ConnectionRefused(String),
    #[error("scorer transport error: {0}")]
    Transport(String),
    #[error("malformed scorer response: {0}")]
    Malformed(String),
    #[error("scorer service returned {status}: {message}")]
    Service { status: u16, message: String },
    #[error("scorer contract violation: {0}")]
    Contract(#[from] ContractViolation),
    #[error("scorer does not support {0}")]
    Unsupported(&'static str),
    #[error("language model is empty")]
    EmptyModel,
}

impl ScoreError {
    /// Transport-level failures worth retrying.
    pub fn is_retryable(&self) -> bool {
        match self {
            Self::Timeout(_) | Self::ConnectionRefused(_) | Self::Transport(_) => true,
            Self::Service { status, .. } => *status >= 500,
            _ => false,
        }
    }

    pub fn is_transport(&self) -> bool {
        matches!(self, Self::Timeout(_) | Self::ConnectionRefused(_) | Self::Transport(_))
    }
}

/// Checks raw backend scores against the query and pairs them with words.
pub fn validate_scores(query: &MaskedQuery, scores: &[f64]) -> Result<Vec<ScoredCandidate>, ContractViolation> {
    if scores.len() != query.candidates.len() {
        return Err(ContractViolation::Length {
            expected: query.candidates.len(),
            got: scores.len(),
        });
    }
    check_range(scores)?;
    Ok(query
        .candidates
        .iter()
        .zip(scores)
        .map(|(w, &s)| ScoredCandidate {
            word: w.clone(),
            score: s,
        })
        .collect())
}

fn check_range(scores: &[f64]) -> Result<(), ContractViolation> {
    for (index, &value) in scores.iter().enumerate() {
        if !value.is_finite() {
            return Err(ContractViolation::NotFinite { index, value });
        }
        if !(0.0..=1.0).contains(&value) {
            return Err(ContractViolation::OutOfRange { index, value });
        }
    }
    Ok(())
}

/// Scores candidate words for a masked slot.
///
/// Implementations must be safe to call from several threads at once.
pub trait Scorer: Send + Sync {
    fn name(&self) -> &str;

    /// One score per candidate, in candidate order.
    fn score(&self, query: &MaskedQuery) -> Result<Vec<ScoredCandidate>, ScoreError>;

    /// Whether scores are renormalized over the candidate set. When true the
    /// absolute real-word threshold compares against a share of the candidate
    /// mass rather than a model probability.
    fn normalizes_over_candidates(&self) -> bool;

    /// Open-vocabulary suggestions for the slot, best first.
    fn top_n(&self, _masked: &MaskedSentence, _n: usize) -> Result<Vec<ScoredCandidate>, ScoreError> {
        Err(ScoreError::Unsupported("open-vocabulary suggestions"))
    }

    /// Queries are independent; batching is only an optimization.
    fn score_batch(&self, queries: &[MaskedQuery]) -> Vec<Result<Vec<ScoredCandidate>, ScoreError>> {
        queries.iter().map(|q| self.score(q)).collect()
    }
}

impl fmt::Debug for dyn Scorer + '_ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Scorer({})", self.name())
    }
}

fn normalize(weights: &[f64]) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    if total > 0.0 {
        weights.iter().map(|w| w / total).collect()
    } else {
        vec![1.0 / weights.len() as f64; weights.len()]
    }
}

/// Context-free frequency prior, normalized over the candidate set.
#[derive(Debug, Clone)]
pub struct UnigramScorer {
    freqs: HashMap<String, u64>,
    floor: f64,
}

impl UnigramScorer {
    pub fn from_lexicon(lexicon: &Lexicon) -> Self {
        let freqs = lexicon
            .words()
            .map(|w| (w.to_owned(), lexicon.frequency(w).unwrap_or(0)))
            .collect();
        Self { freqs, floor: 0.5 }
    }

    pub fn from_counts<I: IntoIterator<Item = (String, u64)>>(counts: I) -> Self {
        Self {
            freqs: counts.into_iter().collect(),
            floor: 0.5,
        }
    }

    /// Pseudo-count given to words without a frequency.
    pub fn with_floor(mut self, floor: f64) -> Self {
        self.floor = floor;
        self
    }

    fn weight(&self, w: &str) -> f64 {
        match self.freqs.get(w) {
            Some(&f) if f > 0 => f as f64,
            _ => self.floor,
        }
    }
}

impl Scorer for UnigramScorer {
    fn name(&self) -> &str {
        "unigram"
    }

    fn score(&self, query: &MaskedQuery) -> Result<Vec<ScoredCandidate>, ScoreError> {
        let w: Vec<f64> = query.candidates.iter().map(|c| self.weight(c)).collect();
        Ok(validate_scores(query, &normalize(&w))?)
    }

    fn normalizes_over_candidates(&self) -> bool {
        true
    }

    fn top_n(&self, _masked: &MaskedSentence, n: usize) -> Result<Vec<ScoredCandidate>, ScoreError> {
        let total: f64 = self.freqs.keys().map(|w| self.weight(w)).sum();
        let mut all: Vec<ScoredCandidate> = self
            .freqs
            .keys()
            .map(|w| ScoredCandidate {
                word: w.clone(),
                score: self.weight(w) / total,
            })
            .collect();
        sort_ranked(&mut all);
        all.truncate(n);
        Ok(all)
    }
}

fn sort_ranked(v: &mut [ScoredCandidate]) {
    v.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.word.cmp(&b.word)));
}

const BOS: u32 = 0;
const EOS: u32 = 1;
const UNK: u32 = u32::MAX;

/// Word n-gram counts with additive smoothing.
#[derive(Debug, Clone)]
pub struct NgramModel {
    order: usize,
    alpha: f64,
    vocab: HashMap<String, u32>,
    words: Vec<String>,
    grams: HashMap<Vec<u32>, u64>,
    histories: HashMap<Vec<u32>, u64>,
    tokens: u64,
}

impl NgramModel {
    /// `order` is clamped to at least 1; `alpha` is the additive pseudo-count.
    pub fn new(order: usize, alpha: f64) -> Self {
        Self {
            order: order.max(1),
            alpha,
            vocab: HashMap::new(),
            words: vec!["<s>".into(), "</s>".into()],
            grams: HashMap::new(),
            histories: HashMap::new(),
            tokens: 0,
        }
    }

    pub fn train<'a, I, S>(order: usize, alpha: f64, sentences: I) -> Self
    where
        I: IntoIterator<Item = &'a [S]>,
        S: AsRef<str> + 'a,
    {
        let mut m = Self::new(order, alpha);
        for s in sentences {
            m.add_sentence(s);
        }
        m
    }

    pub fn add_sentence<S: AsRef<str>>(&mut self, tokens: &[S]) {
        if tokens.is_empty() {
            return;
        }
        let mut seq = vec![BOS; self.order - 1];
        for t in tokens {
            let t = t.as_ref();
            let id = match self.vocab.get(t) {
                Some(&id) => id,
                None => {
                    let id = self.words.len() as u32;
                    self.vocab.insert(t.to_owned(), id);
                    self.words.push(t.to_owned());
                    id
                }
            };
            seq.push(id);
        }
        seq.push(EOS);
        self.tokens += tokens.len() as u64;
        for w in seq.windows(self.order) {
            *self.grams.entry(w.to_vec()).or_insert(0) += 1;
            *self.histories.entry(w[..self.order - 1].to_vec()).or_insert(0) += 1;
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn is_empty(&self) -> bool {
        self.tokens == 0
    }

    /// Distinct training words.
    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    fn id(&self, w: &str) -> u32 {
        self.vocab.get(w).copied().unwrap_or(UNK)
    }

    fn ln_prob(&self, gram: &[u32]) -> f64 {
        let v = (self.vocab.len() + 2) as f64;
        let hist = &gram[..gram.len() - 1];
        let c_hw = self.grams.get(gram).copied().unwrap_or(0) as f64;
        let c_h = self.histories.get(hist).copied().unwrap_or(0) as f64;
        ((c_hw + self.alpha) / (c_h + self.alpha * v)).ln()
    }

    /// Log-probability of every n-gram that covers the slot, with `cand` in it.
    fn slot_ln_score(&self, seq: &mut [u32], slot: usize, cand: u32) -> f64 {
        seq[slot] = cand;
        let n = self.order;
        let last = (slot + n - 1).min(seq.len() - 1);
        (slot..=last).map(|j| self.ln_prob(&seq[j + 1 - n..=j])).sum()
    }

    fn context(&self, masked: &MaskedSentence) -> (Vec<u32>, usize) {
        let mut seq = vec![BOS; self.order - 1];
        seq.extend(masked.tokens.iter().map(|t| self.id(t)));
        seq.push(EOS);
        (seq, masked.mask_index + self.order - 1)
    }
}

fn softmax(logs: &[f64]) -> Vec<f64> {
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// What n-gram slot scores are divided by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    /// Share of the candidate set's mass.
    #[default]
    Candidates,
    /// Probability of the word at the slot among all training words plus
    /// one unknown-word bucket, comparable to a masked model's own output.
    Vocabulary,
}

impl std::str::FromStr for Normalization {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "candidates" => Ok(Self::Candidates),
            "vocabulary" => Ok(Self::Vocabulary),
            _ => Err(format!("unknown normalization `{s}` (expected candidates|vocabulary)")),
        }
    }
}

fn log_sum_exp(logs: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = logs.clone().fold(f64::NEG_INFINITY, f64::max);
    max + logs.map(|l| (l - max).exp()).sum::<f64>().ln()
}

/// Scores each candidate by the smoothed probability of the n-grams that
/// cover the slot (left context times right context), normalized over the
/// candidate set by default.
#[derive(Debug, Clone)]
pub struct NgramScorer {
    model: NgramModel,
    norm: Normalization,
}

impl NgramScorer {
    pub fn new(model: NgramModel) -> Self {
        Self {
            model,
            norm: Normalization::Candidates,
        }
    }

    pub fn with_normalization(mut self, norm: Normalization) -> Self {
        self.norm = norm;
        self
    }

    pub fn normalization(&self) -> Normalization {
        self.norm
    }

    pub fn model(&self) -> &NgramModel {
        &self.model
    }

    /// Log of the slot mass summed over the vocabulary and the unknown bucket.
    fn ln_vocab_mass(&self, seq: &mut [u32], slot: usize) -> f64 {
        let ids = (2..self.model.words.len() as u32).chain(std::iter::once(UNK));
        let logs: Vec<f64> = ids.map(|id| self.model.slot_ln_score(seq, slot, id)).collect();
        log_sum_exp(logs.iter().copied())
    }
}

impl Scorer for NgramScorer {
    fn name(&self) -> &str {
        "ngram"
    }

    fn score(&self, query: &MaskedQuery) -> Result<Vec<ScoredCandidate>, ScoreError> {
        if self.model.is_empty() {
            return Err(ScoreError::EmptyModel);
        }
        let (mut seq, slot) = self.model.context(&query.masked);
        let logs: Vec<f64> = query
            .candidates
            .iter()
            .map(|c| self.model.slot_ln_score(&mut seq, slot, self.model.id(c)))
            .collect();
        let scores = match self.norm {
            Normalization::Candidates => softmax(&logs),
            Normalization::Vocabulary => {
                let z = self.ln_vocab_mass(&mut seq, slot);
                logs.iter().map(|l| (l - z).exp().min(1.0)).collect()
            }
        };
        Ok(validate_scores(query, &scores)?)
    }

    fn normalizes_over_candidates(&self) -> bool {
        self.norm == Normalization::Candidates
    }

    /// Ranks every training word at the slot.
    fn top_n(&self, masked: &MaskedSentence, n: usize) -> Result<Vec<ScoredCandidate>, ScoreError> {
        if self.model.is_empty() {
            return Err(ScoreError::EmptyModel);
        }
        let (mut seq, slot) = self.model.context(masked);
        let vocab = &self.model.words[2..];
        let logs: Vec<f64> = (2..self.model.words.len() as u32)
            .map(|id| self.model.slot_ln_score(&mut seq, slot, id))
            .collect();
        let scores = match self.norm {
            Normalization::Candidates => softmax(&logs),
            Normalization::Vocabulary => {
                let z = self.ln_vocab_mass(&mut seq, slot);
                logs.iter().map(|l| (l - z).exp().min(1.0)).collect()
            }
        };
        let mut all: Vec<ScoredCandidate> = vocab
            .iter()
            .zip(scores)
            .map(|(w, s)| ScoredCandidate {
                word: w.clone(),
                score: s,
            })
            .collect();
        sort_ranked(&mut all);
        all.truncate(n);
        Ok(all)
    }
}

/// Knows the planted original word of each corrupted record: gives it 1 and
/// every other candidate 0. Slots it has no truth for score 0 everywhere.
#[derive(Debug, Clone, Default)]
pub struct OracleScorer {
    truth: HashMap<MaskedSentence, String>,
}

impl OracleScorer {
    pub fn from_records(records: &[ErrorRecord]) -> Self {
        let mut truth = HashMap::new();
        for r in records {
            if let Some(e) = &r.error {
                if let Ok(m) = MaskedSentence::new(&r.tokens, e.index) {
                    truth.entry(m).or_insert_with(|| e.original.clone());
                }
            }
        }
        Self { truth }
    }

    pub fn insert(&mut self, masked: MaskedSentence, word: String) {
        self.truth.insert(masked, word);
    }
}

impl Scorer for OracleScorer {
    fn name(&self) -> &str {
        "oracle"
    }

    fn score(&self, query: &MaskedQuery) -> Result<Vec<ScoredCandidate>, ScoreError> {
        let truth = self.truth.get(&query.masked);
        let scores: Vec<f64> = query
            .candidates
            .iter()
            .map(|c| if Some(c) == truth { 1.0 } else { 0.0 })
            .collect();
        Ok(validate_scores(query, &scores)?)
    }

    fn normalizes_over_candidates(&self) -> bool {
        false
    }

    fn top_n(&self, masked: &MaskedSentence, n: usize) -> Result<Vec<ScoredCandidate>, ScoreError> {
        Ok(self
            .truth
            .get(masked)
            .filter(|_| n > 0)
            .map(|w| {
                vec![ScoredCandidate {
                    word: w.clone(),
                    score: 1.0,
                }]
            })
            .unwrap_or_default())
    }
}
