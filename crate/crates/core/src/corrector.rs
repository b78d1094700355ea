//! Correction pipelines.
//!
//! Out-of-vocabulary words are replaced by the best-scoring dictionary word
//! one edit or one adjacent swap away, with no threshold. In-vocabulary words
//! are only overridden when the best member of their confusion set reaches
//! the threshold `K` and lies within the distance guard. Two baselines are
//! provided for comparison: filtering open-vocabulary suggestions by edit
//! distance, and scoring the full distance-2 ball.

use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::confusion::ConfusionIndex;
use crate::editdist::levenshtein;
use crate::errorgen::RecordsError;
use crate::lexicon::Lexicon;
use crate::scorer::{MaskedQuery, MaskedSentence, QueryError, ScoreError, ScoredCandidate, Scorer};

pub const DEFAULT_THRESHOLD: f64 = 1e-5;
pub const DEFAULT_TOPN: usize = 500;
pub const MAX_DISTANCE: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    #[default]
    Proposed,
    BaselineV1,
    BaselineV2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectionMode {
    /// Correct only the labeled position.
    #[default]
    Oracle,
    /// Visit every token.
    Scan,
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "proposed" => Ok(Self::Proposed),
            "baseline_v1" => Ok(Self::BaselineV1),
            "baseline_v2" => Ok(Self::BaselineV2),
            _ => Err(format!(
                "unknown strategy `{s}` (expected proposed|baseline_v1|baseline_v2)"
            )),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Proposed => "proposed",
            Self::BaselineV1 => "baseline_v1",
            Self::BaselineV2 => "baseline_v2",
        })
    }
}

impl FromStr for DetectionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "oracle" => Ok(Self::Oracle),
            "scan" => Ok(Self::Scan),
            _ => Err(format!("unknown detection mode `{s}` (expected oracle|scan)")),
        }
    }
}

impl fmt::Display for DetectionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Oracle => "oracle",
            Self::Scan => "scan",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectorConfig {
    pub threshold_k: f64,
    pub max_distance: usize,
    pub strategy: Strategy,
    pub detection_mode: DetectionMode,
    pub baseline_v1_topn: usize,
}

impl Default for CorrectorConfig {
    fn default() -> Self {
        Self {
            threshold_k: DEFAULT_THRESHOLD,
            max_distance: MAX_DISTANCE,
            strategy: Strategy::Proposed,
            detection_mode: DetectionMode::Oracle,
            baseline_v1_topn: DEFAULT_TOPN,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CorrectorError {
    #[error("the lexicon is empty")]
    EmptyLexicon,
    #[error("threshold {0} is not in (0, 1]")]
    Threshold(f64),
    #[error("baseline top-n must be at least 1")]
    TopN,
    #[error("token index {index} out of range for {len} tokens")]
    IndexOutOfRange { index: usize, len: usize },
}

impl CorrectorConfig {
    /// The threshold must lie in `(0, 1]`; `1.0` is accepted as the degenerate
    /// setting that only lets certain candidates through.
    pub fn validate(&self) -> Result<(), CorrectorError> {
        if !(self.threshold_k > 0.0 && self.threshold_k <= 1.0) {
            return Err(CorrectorError::Threshold(self.threshold_k));
        }
        if self.baseline_v1_topn == 0 {
            return Err(CorrectorError::TopN);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Replaced,
    Kept,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reason {
    Ok,
    BelowThreshold,
    DistanceGuard,
    NoCandidates,
    ScorerFailure,
}

impl Action {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Replaced => "replaced",
            Self::Kept => "kept",
        }
    }
}

impl Reason {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Ok => "ok",
            Self::BelowThreshold => "below_threshold",
            Self::DistanceGuard => "distance_guard",
            Self::NoCandidates => "no_candidates",
            Self::ScorerFailure => "scorer_failure",
        }
    }
}

impl FromStr for Action {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "replaced" => Ok(Self::Replaced),
            "kept" => Ok(Self::Kept),
            _ => Err(format!("unknown action `{s}`")),
        }
    }
}

impl FromStr for Reason {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ok" => Ok(Self::Ok),
            "below_threshold" => Ok(Self::BelowThreshold),
            "distance_guard" => Ok(Self::DistanceGuard),
            "no_candidates" => Ok(Self::NoCandidates),
            "scorer_failure" => Ok(Self::ScorerFailure),
            _ => Err(format!("unknown reason `{s}`")),
        }
    }
}

/// The corrector's decision for one token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suggestion {
    pub index: usize,
    pub original: String,
    pub replacement: String,
    pub action: Action,
    /// Score of the chosen or best-rejected candidate, when one was scored.
    pub score: Option<f64>,
    pub reason: Reason,
    /// Number of candidates considered.
    #[serde(default)]
    pub candidates: usize,
}

impl Suggestion {
    pub fn kept(index: usize, original: &str, reason: Reason, score: Option<f64>, candidates: usize) -> Self {
        Self {
            index,
            original: original.to_owned(),
            replacement: original.to_owned(),
            action: Action::Kept,
            score,
            reason,
            candidates,
        }
    }

    fn replaced(index: usize, original: &str, best: &Best, candidates: usize) -> Self {
        if best.word == original {
            return Self::kept(index, original, Reason::Ok, Some(best.score), candidates);
        }
        Self {
            index,
            original: original.to_owned(),
            replacement: best.word.clone(),
            action: Action::Replaced,
            score: Some(best.score),
            reason: Reason::Ok,
            candidates,
        }
    }

    pub fn is_replaced(&self) -> bool {
        self.action == Action::Replaced
    }
}

/// Highest-scoring candidate and its distance to the observed word.
#[derive(Debug, Clone, PartialEq)]
pub struct Best {
    pub word: String,
    pub score: f64,
    pub distance: usize,
}

/// Picks the top scorer; ties go to the smaller edit distance to `observed`,
/// then to the lexicographically smaller word.
pub fn pick_best(scored: &[ScoredCandidate], observed: &str) -> Option<Best> {
    scored
        .iter()
        .map(|c| Best {
            word: c.word.clone(),
            score: c.score,
            distance: levenshtein(&c.word, observed),
        })
        .min_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then(a.distance.cmp(&b.distance))
                .then_with(|| a.word.cmp(&b.word))
        })
}

/// Scored confusion set of a real-word slot, before thresholding.
#[derive(Debug, Clone, PartialEq)]
pub struct RealwordScores {
    pub index: usize,
    pub observed: String,
    pub candidates: usize,
    pub best: Result<Option<Best>, ScoreError>,
}

impl RealwordScores {
    /// Applies the threshold and distance guard.
    pub fn decide(&self, threshold_k: f64, max_distance: usize) -> Suggestion {
        let kept = |reason, score| Suggestion::kept(self.index, &self.observed, reason, score, self.candidates);
        match &self.best {
            Err(_) => kept(Reason::ScorerFailure, None),
            Ok(None) => kept(Reason::NoCandidates, None),
            Ok(Some(best)) if best.score < threshold_k => kept(Reason::BelowThreshold, Some(best.score)),
            Ok(Some(best)) if best.distance > max_distance => kept(Reason::DistanceGuard, Some(best.score)),
            Ok(Some(best)) => Suggestion::replaced(self.index, &self.observed, best, self.candidates),
        }
    }
}

/// A token's outcome with the threshold left open, so one scoring pass can
/// be re-decided for any `K`.
#[derive(Debug, Clone, PartialEq)]
pub enum Decision {
    Fixed(Suggestion),
    Threshold(RealwordScores),
}

impl Decision {
    pub fn resolve(&self, threshold_k: f64, max_distance: usize) -> Suggestion {
        match self {
            Self::Fixed(s) => s.clone(),
            Self::Threshold(r) => r.decide(threshold_k, max_distance),
        }
    }
}

/// Suggestions for one sentence and the sentence with them applied.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceCorrection {
    pub suggestions: Vec<Suggestion>,
    pub corrected: Vec<String>,
}

/// Which tokens to correct.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Index(usize),
    All,
}

pub fn mask_word(tokens: &[String], index: usize) -> Result<MaskedSentence, QueryError> {
    MaskedSentence::new(tokens, index)
}

pub struct Corrector<'a> {
    lexicon: &'a Lexicon,
    confusion: &'a ConfusionIndex,
    scorer: &'a dyn Scorer,
    config: CorrectorConfig,
}

impl fmt::Debug for Corrector<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Corrector")
            .field("words", &self.lexicon.len())
            .field("scorer", &self.scorer.name())
            .field("config", &self.config)
            .finish()
    }
}

impl<'a> Corrector<'a> {
    pub fn new(
        lexicon: &'a Lexicon,
        confusion: &'a ConfusionIndex,
        scorer: &'a dyn Scorer,
        config: CorrectorConfig,
    ) -> Result<Self, CorrectorError> {
        if lexicon.is_empty() {
            return Err(CorrectorError::EmptyLexicon);
        }
        config.validate()?;
        Ok(Self {
            lexicon,
            confusion,
            scorer,
            config,
        })
    }

    pub fn config(&self) -> &CorrectorConfig {
        &self.config
    }

    pub fn lexicon(&self) -> &Lexicon {
        self.lexicon
    }

    fn check(&self, tokens: &[String], index: usize) -> Result<(), CorrectorError> {
        if index >= tokens.len() {
            return Err(CorrectorError::IndexOutOfRange {
                index,
                len: tokens.len(),
            });
        }
        Ok(())
    }

    fn score_candidates(
        &self,
        tokens: &[String],
        index: usize,
        candidates: Vec<String>,
    ) -> Result<Option<Best>, ScoreError> {
        if candidates.is_empty() {
            return Ok(None);
        }
        let query = MaskedQuery::new(MaskedSentence::new(tokens, index).expect("index checked"), candidates)
            .expect("candidates are non-empty and distinct");
        let scored = self.scorer.score(&query).inspect_err(|e| {
            log::warn!("scoring `{}` failed: {e}", tokens[index]);
        })?;
        Ok(pick_best(&scored, &tokens[index]))
    }

    /// Candidates for an out-of-vocabulary word: distance-1 words and
    /// adjacent-swap words, in lexicographic order.
    pub fn nonreal_candidates(&self, word: &str) -> Vec<String> {
        let mut set = self.lexicon.candidates_distance1(word);
        set.extend(self.lexicon.candidates_adjacent_swap(word));
        set.into_iter().collect()
    }

    pub fn correct_nonreal(&self, tokens: &[String], index: usize) -> Result<Suggestion, CorrectorError> {
        self.check(tokens, index)?;
        let observed = &tokens[index];
        let candidates = self.nonreal_candidates(observed);
        let n = candidates.len();
        Ok(match self.score_candidates(tokens, index, candidates) {
            Err(_) => Suggestion::kept(index, observed, Reason::ScorerFailure, None, n),
            Ok(None) => Suggestion::kept(index, observed, Reason::NoCandidates, None, n),
            Ok(Some(best)) => Suggestion::replaced(index, observed, &best, n),
        })
    }

    /// Scores the confusion set of `tokens[index]` without deciding.
    pub fn score_realword(&self, tokens: &[String], index: usize) -> Result<RealwordScores, CorrectorError> {
        self.check(tokens, index)?;
        let observed = &tokens[index];
        let candidates = self.confusion.confusion_set(observed).to_vec();
        let n = candidates.len();
        Ok(RealwordScores {
            index,
            observed: observed.clone(),
            candidates: n,
            best: self.score_candidates(tokens, index, candidates),
        })
    }

    pub fn correct_realword(&self, tokens: &[String], index: usize) -> Result<Suggestion, CorrectorError> {
        Ok(self
            .score_realword(tokens, index)?
            .decide(self.config.threshold_k, self.config.max_distance))
    }

    /// Filters the scorer's top-n open-vocabulary suggestions to the distance
    /// guard and keeps the closest one, model rank breaking ties.
    pub fn baseline_v1(&self, tokens: &[String], index: usize) -> Result<Suggestion, CorrectorError> {
        self.check(tokens, index)?;
        let observed = &tokens[index];
        let masked = MaskedSentence::new(tokens, index).expect("index checked");
        let ranked = match self.scorer.top_n(&masked, self.config.baseline_v1_topn) {
            Ok(r) => r,
            Err(e) => {
                log::warn!("top-n for `{observed}` failed: {e}");
                return Ok(Suggestion::kept(index, observed, Reason::ScorerFailure, None, 0));
            }
        };
        let n = ranked.len();
        let best = ranked
            .iter()
            .enumerate()
            .map(|(rank, c)| (levenshtein(&c.word, observed), rank, c))
            .filter(|(d, _, _)| *d <= self.config.max_distance)
            .min_by_key(|(d, rank, _)| (*d, *rank));
        Ok(match best {
            None => Suggestion::kept(index, observed, Reason::NoCandidates, None, n),
            Some((distance, _, c)) => Suggestion::replaced(
                index,
                observed,
                &Best {
                    word: c.word.clone(),
                    score: c.score,
                    distance,
                },
                n,
            ),
        })
    }

    /// Scores every dictionary word within the distance guard.
    pub fn baseline_v2(&self, tokens: &[String], index: usize) -> Result<Suggestion, CorrectorError> {
        self.check(tokens, index)?;
        let observed = &tokens[index];
        let candidates: Vec<String> = self
            .lexicon
            .candidates_within(observed, self.config.max_distance)
            .into_iter()
            .collect();
        let n = candidates.len();
        Ok(match self.score_candidates(tokens, index, candidates) {
            Err(_) => Suggestion::kept(index, observed, Reason::ScorerFailure, None, n),
            Ok(None) => Suggestion::kept(index, observed, Reason::NoCandidates, None, n),
            Ok(Some(best)) => Suggestion::replaced(index, observed, &best, n),
        })
    }

    /// Routes one token through the configured strategy.
    pub fn correct_at(&self, tokens: &[String], index: usize) -> Result<Suggestion, CorrectorError> {
        self.check(tokens, index)?;
        match self.config.strategy {
            Strategy::Proposed if self.lexicon.contains(&tokens[index]) => self.correct_realword(tokens, index),
            Strategy::Proposed => self.correct_nonreal(tokens, index),
            Strategy::BaselineV1 => self.baseline_v1(tokens, index),
            Strategy::BaselineV2 => self.baseline_v2(tokens, index),
        }
    }

    /// Like [`Self::correct_at`] but leaves the real-word threshold open.
    pub fn decision_at(&self, tokens: &[String], index: usize) -> Result<Decision, CorrectorError> {
        self.check(tokens, index)?;
        match self.config.strategy {
            Strategy::Proposed if self.lexicon.contains(&tokens[index]) => {
                Ok(Decision::Threshold(self.score_realword(tokens, index)?))
            }
            _ => Ok(Decision::Fixed(self.correct_at(tokens, index)?)),
        }
    }

    /// Corrects one position, or every position. Each token is decided on the
    /// uncorrected sentence.
    pub fn correct_sentence(&self, tokens: &[String], target: Target) -> Result<SentenceCorrection, CorrectorError> {
        let suggestions = match target {
            Target::Index(i) => vec![self.correct_at(tokens, i)?],
            Target::All => (0..tokens.len())
                .map(|i| self.correct_at(tokens, i))
                .collect::<Result<_, _>>()?,
        };
        let mut corrected = tokens.to_vec();
        for s in &suggestions {
            corrected[s.index] = s.replacement.clone();
        }
        Ok(SentenceCorrection { suggestions, corrected })
    }
}

/// One row of the predictions file.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub sentence_id: u64,
    pub suggestion: Suggestion,
}

impl Prediction {
    /// `sentence_id, token_index, original, replacement, action, score, reason`;
    /// the score column is empty when nothing was scored.
    pub fn to_tsv_line(&self) -> String {
        let s = &self.suggestion;
        let score = s.score.map(|v| v.to_string()).unwrap_or_default();
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.sentence_id,
            s.index,
            s.original,
            s.replacement,
            s.action.as_str(),
            score,
            s.reason.as_str()
        )
    }

    pub fn from_tsv_line(line: &str) -> Result<Self, String> {
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 7 {
            return Err(format!("expected 7 fields, found {}", f.len()));
        }
        let sentence_id = f[0].parse().map_err(|_| format!("bad sentence id `{}`", f[0]))?;
        let index = f[1].parse().map_err(|_| format!("bad token index `{}`", f[1]))?;
        let score = match f[5] {
            "" => None,
            v => Some(v.parse::<f64>().map_err(|_| format!("bad score `{v}`"))?),
        };
        Ok(Self {
            sentence_id,
            suggestion: Suggestion {
                index,
                original: f[2].to_owned(),
                replacement: f[3].to_owned(),
                action: f[4].parse()?,
                score,
                reason: f[6].parse()?,
                candidates: 0,
            },
        })
    }
}

pub fn write_predictions<W: Write>(rows: &[Prediction], mut out: W) -> io::Result<()> {
    for r in rows {
        writeln!(out, "{}", r.to_tsv_line())?;
    }
    Ok(())
}

/// Reads a predictions file. Candidate counts are not part of the format and
/// come back as zero.
pub fn read_predictions<R: BufRead>(input: R) -> Result<Vec<Prediction>, RecordsError> {
    let mut out = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        out.push(Prediction::from_tsv_line(&line).map_err(|message| RecordsError::Parse { line: n + 1, message })?);
    }
    Ok(out)
}
