//! Word-level judging, metrics and reports.
//!
//! Each gold record is judged at one position: its labeled error, or for an
//! unchanged record the probe site from [`eval_site`]. A record with an
//! error is a true positive when the suggestion equals the original word and
//! a false negative otherwise; an unchanged record is a true negative when
//! kept and a false positive when replaced.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::{self, Write};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::confusion::ConfusionIndex;
use crate::corrector::{Action, Decision, Prediction, Reason, Suggestion};
use crate::editdist::levenshtein;
use crate::errorgen::{eval_site, Category, ErrorClass, ErrorRecord, EvalSite};
use crate::letters::{HomophoneMap, KeyboardAdjacency};
use crate::textnorm::{normalize_zwnj, ZwnjMode};

/// Thresholds swept by default.
pub const DEFAULT_SWEEP: [f64; 5] = [1e-1, 1e-3, 1e-5, 1e-7, 1e-9];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Tp,
    Tn,
    Fp,
    Fn,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("sentence {0}: no prediction at the judged position")]
    MissingPrediction(u64),
    #[error("sentence {0}: prediction has no gold record")]
    UnknownSentence(u64),
    #[error("sentence {0}: gold id appears more than once")]
    DuplicateGold(u64),
    #[error("sentence {0}: no position to judge (no error and no confusable token)")]
    NoSite(u64),
    #[error("{sites} sites for {records} records")]
    Misaligned { records: usize, sites: usize },
}

fn same_word(a: &str, b: &str, mode: ZwnjMode) -> bool {
    match mode {
        ZwnjMode::Preserve => a == b,
        ZwnjMode::Strip => normalize_zwnj(a, ZwnjMode::Strip) == normalize_zwnj(b, ZwnjMode::Strip),
    }
}

/// Judges the suggestion made at the record's judged position. In strip
/// mode a replacement that only differs from the observed word by ZWNJ
/// counts as kept.
pub fn judge(record: &ErrorRecord, suggestion: &Suggestion, mode: ZwnjMode) -> Outcome {
    match &record.error {
        Some(e) if same_word(&suggestion.replacement, &e.original, mode) => Outcome::Tp,
        Some(_) => Outcome::Fn,
        None if suggestion.action == Action::Kept => Outcome::Tn,
        None if same_word(&suggestion.replacement, &suggestion.original, mode) => Outcome::Tn,
        None => Outcome::Fp,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn new(tp: u64, tn: u64, fp: u64, fn_: u64) -> Self {
        Self { tp, tn, fp, fn_ }
    }

    pub fn add(&mut self, o: Outcome) {
        match o {
            Outcome::Tp => self.tp += 1,
            Outcome::Tn => self.tn += 1,
            Outcome::Fp => self.fp += 1,
            Outcome::Fn => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }
}

impl std::ops::AddAssign for ConfusionCounts {
    fn add_assign(&mut self, o: Self) {
        self.tp += o.tp;
        self.tn += o.tn;
        self.fp += o.fp;
        self.fn_ += o.fn_;
    }
}

impl std::iter::Sum for ConfusionCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        let mut acc = Self::default();
        for c in iter {
            acc += c;
        }
        acc
    }
}

/// Reports write undefined values as `"n/a"`.
mod na {
    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) => s.serialize_f64(*x),
            None => s.serialize_str("n/a"),
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Ok(match Raw::deserialize(d)? {
            Raw::Num(x) => Some(x),
            Raw::Text(t) if t == "n/a" => None,
            Raw::Text(t) => return Err(D::Error::custom(format!("expected a number or \"n/a\", found `{t}`"))),
        })
    }
}

/// `None` marks a zero denominator.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    #[serde(with = "na")]
    pub accuracy: Option<f64>,
    #[serde(with = "na")]
    pub precision: Option<f64>,
    #[serde(with = "na")]
    pub recall: Option<f64>,
    #[serde(with = "na")]
    pub f1: Option<f64>,
}

pub const METRIC_NAMES: [&str; 4] = ["accuracy", "precision", "recall", "f1"];

impl MetricSet {
    pub fn get(&self, name: &str) -> Option<f64> {
        match name {
            "accuracy" => self.accuracy,
            "precision" => self.precision,
            "recall" => self.recall,
            "f1" => self.f1,
            _ => None,
        }
    }

    fn values(&self) -> [Option<f64>; 4] {
        [self.accuracy, self.precision, self.recall, self.f1]
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn metrics(c: &ConfusionCounts) -> MetricSet {
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    MetricSet {
        accuracy: ratio(c.tp + c.tn, c.total()),
        precision,
        recall,
        f1,
    }
}

/// Micro metrics from summed counts and macro means over defined per-class
/// values; classes left out of a macro mean are listed per metric.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub counts: ConfusionCounts,
    pub micro: MetricSet,
    #[serde(rename = "macro")]
    pub macro_avg: MetricSet,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub macro_excluded: BTreeMap<String, Vec<String>>,
}

pub fn aggregate<'a, I>(per_class: I) -> Aggregate
where
    I: IntoIterator<Item = (&'a str, &'a ConfusionCounts)>,
{
    let per_class: Vec<(&str, &ConfusionCounts)> = per_class.into_iter().collect();
    let counts: ConfusionCounts = per_class.iter().map(|(_, c)| **c).sum();
    let mut sums = [0.0f64; 4];
    let mut defined = [0usize; 4];
    let mut macro_excluded: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (label, c) in &per_class {
        for (k, v) in metrics(c).values().into_iter().enumerate() {
            match v {
                Some(x) => {
                    sums[k] += x;
                    defined[k] += 1;
                }
                None => macro_excluded
                    .entry(METRIC_NAMES[k].to_owned())
                    .or_default()
                    .push(label.to_string()),
            }
        }
    }
    let mean = |k: usize| (defined[k] > 0).then(|| sums[k] / defined[k] as f64);
    Aggregate {
        counts,
        micro: metrics(&counts),
        macro_avg: MetricSet {
            accuracy: mean(0),
            precision: mean(1),
            recall: mean(2),
            f1: mean(3),
        },
        macro_excluded,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub class: ErrorClass,
    pub counts: ConfusionCounts,
    pub metrics: MetricSet,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ExactMatch {
    pub matched: u64,
    pub total: u64,
    #[serde(with = "na")]
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub sentences: u64,
    pub wall_minutes: f64,
    pub ms_per_sentence: f64,
}

impl Timing {
    pub fn new(elapsed: Duration, sentences: u64) -> Self {
        let ms = elapsed.as_secs_f64() * 1e3;
        Self {
            sentences,
            wall_minutes: elapsed.as_secs_f64() / 60.0,
            ms_per_sentence: if sentences == 0 { 0.0 } else { ms / sentences as f64 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateStats {
    pub sites: u64,
    pub total: u64,
    pub mean: f64,
}

impl CandidateStats {
    pub fn from_counts<I: IntoIterator<Item = usize>>(counts: I) -> Self {
        let (mut sites, mut total) = (0u64, 0u64);
        for c in counts {
            sites += 1;
            total += c as u64;
        }
        Self {
            sites,
            total,
            mean: if sites == 0 { 0.0 } else { total as f64 / sites as f64 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub zwnj_mode: ZwnjMode,
    pub records: u64,
    pub classes: Vec<ClassReport>,
    pub overall: Aggregate,
    pub real: Aggregate,
    pub nonreal: Aggregate,
    pub replaced: u64,
    pub scorer_failures: u64,
    pub sentence_exact_match: ExactMatch,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidates: Option<CandidateStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
    /// Resolved run configuration, filled in by the caller.
    #[serde(default)]
    pub metadata: serde_json::Value,
}

impl EvalReport {
    pub fn class(&self, class: ErrorClass) -> Option<&ClassReport> {
        self.classes.iter().find(|c| c.class == class)
    }
}

/// Judged position for every gold record, in order.
pub fn compute_sites(
    gold: &[ErrorRecord],
    confusion: &ConfusionIndex,
    adj: &KeyboardAdjacency,
    hmap: &HomophoneMap,
) -> Result<Vec<EvalSite>, EvalError> {
    gold.iter()
        .map(|r| eval_site(r, confusion, adj, hmap).ok_or(EvalError::NoSite(r.sentence_id)))
        .collect()
}

/// One judged gold record.
#[derive(Debug, Clone, PartialEq)]
pub struct Judged<'a> {
    pub record: &'a ErrorRecord,
    pub site: EvalSite,
    pub suggestion: &'a Suggestion,
    pub outcome: Outcome,
}

/// Pairs predictions with gold records and judges each record.
pub fn judge_all<'a>(
    gold: &'a [ErrorRecord],
    sites: &[EvalSite],
    predictions: &'a [Prediction],
    mode: ZwnjMode,
) -> Result<Vec<Judged<'a>>, EvalError> {
    if gold.len() != sites.len() {
        return Err(EvalError::Misaligned {
            records: gold.len(),
            sites: sites.len(),
        });
    }
    let mut ids = HashSet::with_capacity(gold.len());
    for r in gold {
        if !ids.insert(r.sentence_id) {
            return Err(EvalError::DuplicateGold(r.sentence_id));
        }
    }
    let mut by_pos: HashMap<(u64, usize), &Suggestion> = HashMap::with_capacity(predictions.len());
    for p in predictions {
        if !ids.contains(&p.sentence_id) {
            return Err(EvalError::UnknownSentence(p.sentence_id));
        }
        by_pos.insert((p.sentence_id, p.suggestion.index), &p.suggestion);
    }
    gold.iter()
        .zip(sites)
        .map(|(record, site)| {
            let suggestion = by_pos
                .get(&(record.sentence_id, site.index))
                .copied()
                .ok_or(EvalError::MissingPrediction(record.sentence_id))?;
            Ok(Judged {
                record,
                site: *site,
                suggestion,
                outcome: judge(record, suggestion, mode),
            })
        })
        .collect()
}

fn exact_match(gold: &[ErrorRecord], predictions: &[Prediction], mode: ZwnjMode) -> ExactMatch {
    let mut by_id: HashMap<u64, Vec<&Suggestion>> = HashMap::new();
    for p in predictions {
        by_id.entry(p.sentence_id).or_default().push(&p.suggestion);
    }
    let mut matched = 0;
    for r in gold {
        let mut tokens = r.tokens.clone();
        for s in by_id.get(&r.sentence_id).into_iter().flatten() {
            if let Some(t) = tokens.get_mut(s.index) {
                *t = s.replacement.clone();
            }
        }
        if same_word(&tokens.join(" "), &r.original_tokens().join(" "), mode) {
            matched += 1;
        }
    }
    let total = gold.len() as u64;
    ExactMatch {
        matched,
        total,
        rate: ratio(matched, total),
    }
}

pub fn evaluate(
    gold: &[ErrorRecord],
    sites: &[EvalSite],
    predictions: &[Prediction],
    mode: ZwnjMode,
) -> Result<EvalReport, EvalError> {
    let judged = judge_all(gold, sites, predictions, mode)?;
    let mut per_class: BTreeMap<ErrorClass, ConfusionCounts> =
        ErrorClass::all().map(|c| (c, Default::default())).collect();
    for j in &judged {
        per_class.entry(j.site.class).or_default().add(j.outcome);
    }
    let labels: BTreeMap<ErrorClass, String> = per_class.keys().map(|c| (*c, c.to_string())).collect();
    let block = |filter: Option<Category>| {
        aggregate(
            per_class
                .iter()
                .filter(|(c, _)| filter.is_none_or(|f| c.category == f))
                .map(|(c, n)| (labels[c].as_str(), n)),
        )
    };
    let classes = ErrorClass::all()
        .map(|class| ClassReport {
            class,
            counts: per_class[&class],
            metrics: metrics(&per_class[&class]),
        })
        .collect();
    Ok(EvalReport {
        zwnj_mode: mode,
        records: gold.len() as u64,
        classes,
        overall: block(None),
        real: block(Some(Category::Real)),
        nonreal: block(Some(Category::Nonreal)),
        replaced: predictions
            .iter()
            .filter(|p| p.suggestion.action == Action::Replaced)
            .count() as u64,
        scorer_failures: predictions
            .iter()
            .filter(|p| p.suggestion.reason == Reason::ScorerFailure)
            .count() as u64,
        sentence_exact_match: exact_match(gold, predictions, mode),
        candidates: None,
        timing: None,
        metadata: serde_json::Value::Null,
    })
}

/// Reports on raw strings and on ZWNJ-stripped strings.
pub fn zwnj_ablation(
    gold: &[ErrorRecord],
    sites: &[EvalSite],
    predictions: &[Prediction],
) -> Result<(EvalReport, EvalReport), EvalError> {
    Ok((
        evaluate(gold, sites, predictions, ZwnjMode::Preserve)?,
        evaluate(gold, sites, predictions, ZwnjMode::Strip)?,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub threshold: f64,
    pub overall: MetricSet,
    pub real: MetricSet,
    pub replaced: u64,
}

/// Resolves every decision at `threshold_k`.
pub fn resolve_all(decisions: &[(u64, Decision)], threshold_k: f64, max_distance: usize) -> Vec<Prediction> {
    decisions
        .iter()
        .map(|(id, d)| Prediction {
            sentence_id: *id,
            suggestion: d.resolve(threshold_k, max_distance),
        })
        .collect()
}

/// Re-thresholds one scoring pass at each `K`.
pub fn threshold_sweep(
    gold: &[ErrorRecord],
    sites: &[EvalSite],
    decisions: &[(u64, Decision)],
    thresholds: &[f64],
    max_distance: usize,
) -> Result<Vec<SweepPoint>, EvalError> {
    thresholds
        .iter()
        .map(|&k| {
            let preds = resolve_all(decisions, k, max_distance);
            let report = evaluate(gold, sites, &preds, ZwnjMode::Preserve)?;
            Ok(SweepPoint {
                threshold: k,
                overall: report.overall.micro,
                real: report.real.micro,
                replaced: report.replaced,
            })
        })
        .collect()
}

struct Na(Option<f64>);

impl fmt::Display for Na {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(x) => write!(f, "{x}"),
            None => f.write_str("n/a"),
        }
    }
}

pub fn write_sweep_csv<W: Write>(points: &[SweepPoint], mut out: W) -> io::Result<()> {
    writeln!(
        out,
        "threshold,precision,recall,f1,real_precision,real_recall,real_f1,replaced"
    )?;
    for p in points {
        writeln!(
            out,
            "{:e},{},{},{},{},{},{},{}",
            p.threshold,
            Na(p.overall.precision),
            Na(p.overall.recall),
            Na(p.overall.f1),
            Na(p.real.precision),
            Na(p.real.recall),
            Na(p.real.f1),
            p.replaced
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagRow {
    pub class: ErrorClass,
    pub metric: String,
    pub bin: String,
    pub count: u64,
}

/// Histograms over missed errors: edit distance between the suggestion and
/// the observed word, and score decile (`none` when nothing was scored).
pub fn diagnostics(
    gold: &[ErrorRecord],
    sites: &[EvalSite],
    predictions: &[Prediction],
    mode: ZwnjMode,
) -> Result<Vec<DiagRow>, EvalError> {
    // bin sort key, "none" after the deciles
    let mut bins: BTreeMap<(ErrorClass, &str, u64), u64> = BTreeMap::new();
    for j in judge_all(gold, sites, predictions, mode)? {
        if j.outcome != Outcome::Fn {
            continue;
        }
        let observed = &j.record.tokens[j.site.index];
        let d = levenshtein(&j.suggestion.replacement, observed) as u64;
        *bins.entry((j.site.class, "distance", d)).or_default() += 1;
        let decile = j.suggestion.score.map_or(10, |s| ((s * 10.0).floor() as u64).min(9));
        *bins.entry((j.site.class, "score_decile", decile)).or_default() += 1;
    }
    Ok(bins
        .into_iter()
        .map(|((class, metric, bin), count)| DiagRow {
            class,
            metric: metric.to_owned(),
            bin: if metric == "score_decile" && bin == 10 {
                "none".into()
            } else {
                bin.to_string()
            },
            count,
        })
        .collect())
}

pub fn write_diagnostics_csv<W: Write>(rows: &[DiagRow], mut out: W) -> io::Result<()> {
    writeln!(out, "class,metric,bin,count")?;
    for r in rows {
        writeln!(out, "{},{},{},{}", r.class, r.metric, r.bin, r.count)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::errorgen::{ErrorType, InjectedError};

    fn close(a: Option<f64>, b: f64) -> bool {
        a.is_some_and(|a| (a - b).abs() < 1e-12)
    }

    fn rec(id: u64, tokens: &[&str], error: Option<(usize, &str, Category, ErrorType)>) -> ErrorRecord {
        let tokens: Vec<String> = tokens.iter().map(|s| s.to_string()).collect();
        let error = error.map(|(index, original, category, etype)| InjectedError {
            index,
            original: original.into(),
            corrupted: tokens[index].clone(),
            category,
            etype,
        });
        ErrorRecord {
            sentence_id: id,
            tokens,
            error,
        }
    }

    fn pred(id: u64, index: usize, original: &str, replacement: &str, score: Option<f64>) -> Prediction {
        let action = if original == replacement {
            Action::Kept
        } else {
            Action::Replaced
        };
        Prediction {
            sentence_id: id,
            suggestion: Suggestion {
                index,
                original: original.into(),
                replacement: replacement.into(),
                action,
                score,
                reason: Reason::Ok,
                candidates: 0,
            },
        }
    }

    fn site(index: usize, category: Category, etype: ErrorType, has_error: bool) -> EvalSite {
        EvalSite {
            index,
            class: ErrorClass::new(category, etype),
            has_error,
        }
    }

    #[test]
    fn judge_cases() {
        let r = rec(
            0,
            &["a", "cta"],
            Some((1, "cat", Category::Nonreal, ErrorType::Substitution)),
        );
        assert_eq!(
            judge(&r, &pred(0, 1, "cta", "cat", None).suggestion, ZwnjMode::Preserve),
            Outcome::Tp
        );
        assert_eq!(
            judge(&r, &pred(0, 1, "cta", "act", None).suggestion, ZwnjMode::Preserve),
            Outcome::Fn
        );
        assert_eq!(
            judge(&r, &pred(0, 1, "cta", "cta", None).suggestion, ZwnjMode::Preserve),
            Outcome::Fn
        );
        let clean = rec(1, &["a", "cat"], None);
        assert_eq!(
            judge(&clean, &pred(1, 1, "cat", "cat", None).suggestion, ZwnjMode::Preserve),
            Outcome::Tn
        );
        assert_eq!(
            judge(&clean, &pred(1, 1, "cat", "cot", None).suggestion, ZwnjMode::Preserve),
            Outcome::Fp
        );
    }

    #[test]
    fn judge_zwnj() {
        let r = rec(
            0,
            &["میروم"],
            Some((0, "می\u{200c}روم", Category::Nonreal, ErrorType::Keyboard)),
        );
        let s = pred(0, 0, "میروم", "میروم", None).suggestion;
        assert_eq!(judge(&r, &s, ZwnjMode::Preserve), Outcome::Fn);
        assert_eq!(judge(&r, &s, ZwnjMode::Strip), Outcome::Tp);
    }

    #[test]
    fn metric_examples() {
        let m = metrics(&ConfusionCounts::new(8, 90, 1, 1));
        assert!(close(m.accuracy, 0.98));
        assert!(close(m.precision, 8.0 / 9.0));
        assert!(close(m.recall, 8.0 / 9.0));
        assert!(close(m.f1, 8.0 / 9.0));

        let m = metrics(&ConfusionCounts::new(0, 10, 0, 0));
        assert_eq!(m.precision, None);
        assert_eq!(m.recall, None);
        assert_eq!(m.f1, None);
        assert!(close(m.accuracy, 1.0));

        let m = metrics(&ConfusionCounts::new(1, 0, 1, 1));
        assert!(close(m.precision, 0.5) && close(m.recall, 0.5) && close(m.f1, 0.5));

        assert_eq!(metrics(&ConfusionCounts::default()), MetricSet::default());
        // precision and recall both zero
        assert_eq!(metrics(&ConfusionCounts::new(0, 0, 3, 2)).f1, None);
    }

    #[test]
    fn aggregate_examples() {
        let a = ConfusionCounts::new(9, 0, 1, 0);
        let b = ConfusionCounts::new(1, 0, 1, 0);
        let agg = aggregate([("a", &a), ("b", &b)]);
        assert!(close(agg.micro.precision, 10.0 / 12.0));
        assert!(close(agg.macro_avg.precision, 0.7));

        let single = aggregate([("a", &a)]);
        assert_eq!(single.micro, single.macro_avg);
        let twin = aggregate([("a", &a), ("b", &a)]);
        assert_eq!(twin.micro, twin.macro_avg);

        let empty = ConfusionCounts::new(0, 4, 0, 0);
        let agg = aggregate([("a", &a), ("e", &empty)]);
        assert_eq!(agg.macro_avg.precision, metrics(&a).precision);
        assert_eq!(agg.macro_excluded["precision"], vec!["e".to_string()]);
        assert!(close(agg.macro_avg.accuracy, (0.9 + 1.0) / 2.0));
    }

    #[test]
    fn na_serialization() {
        let m = metrics(&ConfusionCounts::new(0, 10, 0, 0));
        let json = serde_json::to_string(&m).unwrap();
        assert!(json.contains("\"precision\":\"n/a\""), "{json}");
        let back: MetricSet = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
    }

    fn fixture() -> (Vec<ErrorRecord>, Vec<EvalSite>, Vec<Prediction>) {
        use Category::*;
        use ErrorType::*;
        let gold = vec![
            rec(0, &["x", "cta"], Some((1, "cat", Nonreal, Substitution))),
            rec(1, &["x", "cot"], Some((1, "cat", Real, Keyboard))),
            rec(2, &["x", "cat"], None),
            rec(3, &["x", "dgo"], Some((1, "dog", Nonreal, Substitution))),
        ];
        let sites = vec![
            site(1, Nonreal, Substitution, true),
            site(1, Real, Keyboard, true),
            site(1, Real, Keyboard, false),
            site(1, Nonreal, Substitution, true),
        ];
        let preds = vec![
            pred(0, 1, "cta", "cat", Some(0.9)),
            pred(1, 1, "cot", "cot", Some(1e-7)),
            pred(2, 1, "cat", "cot", Some(0.4)),
            pred(3, 1, "dgo", "dig", Some(0.35)),
        ];
        (gold, sites, preds)
    }

    #[test]
    fn report_counts() {
        let (gold, sites, preds) = fixture();
        let r = evaluate(&gold, &sites, &preds, ZwnjMode::Preserve).unwrap();
        let ns = r
            .class(ErrorClass::new(Category::Nonreal, ErrorType::Substitution))
            .unwrap();
        assert_eq!(ns.counts, ConfusionCounts::new(1, 0, 0, 1));
        let rk = r.class(ErrorClass::new(Category::Real, ErrorType::Keyboard)).unwrap();
        assert_eq!(rk.counts, ConfusionCounts::new(0, 0, 1, 1));
        assert_eq!(r.overall.counts, ConfusionCounts::new(1, 0, 1, 2));
        assert_eq!(r.classes.len(), 6);
        let total: u64 = r.classes.iter().map(|c| c.counts.total()).sum();
        assert_eq!(total, 4);
        assert_eq!(r.replaced, 3);
        assert_eq!(r.sentence_exact_match.matched, 1);
        let json = serde_json::to_string(&r).unwrap();
        let back: EvalReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn mismatched_ids() {
        let (gold, sites, mut preds) = fixture();
        preds.push(pred(99, 0, "a", "a", None));
        assert_eq!(
            evaluate(&gold, &sites, &preds, ZwnjMode::Preserve).unwrap_err(),
            EvalError::UnknownSentence(99)
        );
        let (gold, sites, mut preds) = fixture();
        preds.remove(2);
        assert_eq!(
            evaluate(&gold, &sites, &preds, ZwnjMode::Preserve).unwrap_err(),
            EvalError::MissingPrediction(2)
        );
    }

    #[test]
    fn diagnostics_bins() {
        let (gold, sites, preds) = fixture();
        let rows = diagnostics(&gold, &sites, &preds, ZwnjMode::Preserve).unwrap();
        let find = |class: ErrorClass, metric: &str, bin: &str| {
            rows.iter()
                .find(|r| r.class == class && r.metric == metric && r.bin == bin)
                .map(|r| r.count)
        };
        let rk = ErrorClass::new(Category::Real, ErrorType::Keyboard);
        let ns = ErrorClass::new(Category::Nonreal, ErrorType::Substitution);
        // kept "cot": distance 0, score 1e-7 in decile 0
        assert_eq!(find(rk, "distance", "0"), Some(1));
        assert_eq!(find(rk, "score_decile", "0"), Some(1));
        // "dig" vs "dgo": distance 2, score 0.35 in decile 3
        assert_eq!(find(ns, "distance", "2"), Some(1));
        assert_eq!(find(ns, "score_decile", "3"), Some(1));
        assert_eq!(rows.len(), 4);

        let all_tp: Vec<Prediction> = gold
            .iter()
            .map(|r| {
                let o = r.original_tokens();
                pred(r.sentence_id, 1, &r.tokens[1], &o[1], None)
            })
            .collect();
        assert!(diagnostics(&gold, &sites, &all_tp, ZwnjMode::Preserve)
            .unwrap()
            .is_empty());
        let mut csv = Vec::new();
        write_diagnostics_csv(&rows, &mut csv).unwrap();
        assert!(String::from_utf8(csv).unwrap().starts_with("class,metric,bin,count\n"));
    }

    #[test]
    fn sweep_from_decisions() {
        use crate::corrector::Best;
        use crate::corrector::RealwordScores;
        let (gold, sites, preds) = fixture();
        let decisions: Vec<(u64, Decision)> = vec![
            (0, Decision::Fixed(preds[0].suggestion.clone())),
            (
                1,
                Decision::Threshold(RealwordScores {
                    index: 1,
                    observed: "cot".into(),
                    candidates: 1,
                    best: Ok(Some(Best {
                        word: "cat".into(),
                        score: 1e-4,
                        distance: 1,
                    })),
                }),
            ),
            (
                2,
                Decision::Threshold(RealwordScores {
                    index: 1,
                    observed: "cat".into(),
                    candidates: 1,
                    best: Ok(Some(Best {
                        word: "cot".into(),
                        score: 1e-6,
                        distance: 1,
                    })),
                }),
            ),
            (3, Decision::Fixed(preds[3].suggestion.clone())),
        ];
        let points = threshold_sweep(&gold, &sites, &decisions, &[1.0, 1e-3, 1e-5, 1e-7], 2).unwrap();
        let replaced: Vec<u64> = points.iter().map(|p| p.replaced).collect();
        assert_eq!(replaced, vec![2, 2, 3, 4]);
        assert_eq!(points[0].real.recall, Some(0.0));
        assert_eq!(points[2].real.recall, Some(1.0));
        let mut csv = Vec::new();
        write_sweep_csv(&points, &mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 5);
    }
}
