//! Masking schedules for fine-tuning an external masked language model.
//!
//! Each ordinary word is selected with probability 0.15; a selected word is
//! masked, swapped for a random dictionary word, or left as is (0.8/0.1/0.1)
//! and contributes to the loss. The labeled error word always contributes to
//! the loss and goes through the same three-way draw. Plans are whole-word;
//! mapping them onto subword pieces is left to the consumer.
//!
//! Training file: one line per record, four tab-separated columns of
//! space-separated items aligned by word: original tokens, corrupted tokens,
//! action codes (`m`, `r`, `k`, `n`) and loss flags (`0`, `1`).

use std::io::{self, Write};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::errorgen::{substream, ErrorRecord};
use crate::lexicon::Lexicon;
use crate::scorer::MASK_TOKEN;

/// Substream tag keeping plan draws apart from corruption draws under the
/// same seed.
const PLAN_STREAM: u64 = 0xB1A5_0000_0000_0001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskAction {
    Mask,
    RandomReplace,
    Keep,
    None,
}

impl MaskAction {
    pub fn code(self) -> char {
        match self {
            Self::Mask => 'm',
            Self::RandomReplace => 'r',
            Self::Keep => 'k',
            Self::None => 'n',
        }
    }

    pub fn from_code(c: char) -> Option<Self> {
        match c {
            'm' => Some(Self::Mask),
            'r' => Some(Self::RandomReplace),
            'k' => Some(Self::Keep),
            'n' => Some(Self::None),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskingConfig {
    pub p_select: f64,
    pub p_mask: f64,
    pub p_random: f64,
    pub p_keep: f64,
}

impl Default for MaskingConfig {
    fn default() -> Self {
        Self {
            p_select: 0.15,
            p_mask: 0.8,
            p_random: 0.1,
            p_keep: 0.1,
        }
    }
}

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("{name} = {value} is not a probability in [0, 1]")]
    Probability { name: &'static str, value: f64 },
    #[error("mask/random/keep probabilities sum to {0}, expected 1")]
    Split(f64),
    #[error("{plans} plans for {records} records")]
    Misaligned { records: usize, plans: usize },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl MaskingConfig {
    pub fn validate(&self) -> Result<(), PlanError> {
        for (name, value) in [
            ("p_select", self.p_select),
            ("p_mask", self.p_mask),
            ("p_random", self.p_random),
            ("p_keep", self.p_keep),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(PlanError::Probability { name, value });
            }
        }
        let sum = self.p_mask + self.p_random + self.p_keep;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(PlanError::Split(sum));
        }
        Ok(())
    }
}

/// Per-word actions and loss flags for one record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskingPlan {
    pub actions: Vec<MaskAction>,
    pub loss: Vec<bool>,
    /// Replacement word for [`MaskAction::RandomReplace`] positions.
    pub replacements: Vec<Option<String>>,
}

impl MaskingPlan {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// The model input after applying the plan to `tokens`.
    pub fn apply(&self, tokens: &[String]) -> Vec<String> {
        tokens
            .iter()
            .zip(&self.actions)
            .zip(&self.replacements)
            .map(|((t, a), r)| match (a, r) {
                (MaskAction::Mask, _) => MASK_TOKEN.to_owned(),
                (MaskAction::RandomReplace, Some(w)) => w.clone(),
                _ => t.clone(),
            })
            .collect()
    }
}

/// Uniform dictionary word other than `word`, or `None` when the dictionary
/// has no other word.
fn random_other(lexicon: &Lexicon, word: &str, rng: &mut ChaCha8Rng) -> Option<String> {
    match lexicon.index_of(word) {
        Some(own) => {
            if lexicon.len() < 2 {
                return None;
            }
            let mut i = rng.random_range(0..lexicon.len() - 1);
            if i >= own {
                i += 1;
            }
            Some(lexicon.word(i).to_owned())
        }
        None if lexicon.is_empty() => None,
        None => Some(lexicon.word(rng.random_range(0..lexicon.len())).to_owned()),
    }
}

/// Draws a plan over the record's observed tokens.
pub fn build_masking_plan(
    record: &ErrorRecord,
    lexicon: &Lexicon,
    config: &MaskingConfig,
    rng: &mut ChaCha8Rng,
) -> MaskingPlan {
    let n = record.tokens.len();
    let error = record.error_index();
    let mut plan = MaskingPlan {
        actions: vec![MaskAction::None; n],
        loss: vec![false; n],
        replacements: vec![None; n],
    };
    for (i, token) in record.tokens.iter().enumerate() {
        let selected = Some(i) == error || rng.random::<f64>() < config.p_select;
        if !selected {
            continue;
        }
        plan.loss[i] = true;
        let u = rng.random::<f64>();
        plan.actions[i] = if u < config.p_mask {
            MaskAction::Mask
        } else if u < config.p_mask + config.p_random {
            match random_other(lexicon, token, rng) {
                Some(w) => {
                    plan.replacements[i] = Some(w);
                    MaskAction::RandomReplace
                }
                None => MaskAction::Keep,
            }
        } else {
            MaskAction::Keep
        };
    }
    plan
}

/// One plan per record, each from its own substream keyed by sentence id.
pub fn plan_records(records: &[ErrorRecord], lexicon: &Lexicon, config: &MaskingConfig, seed: u64) -> Vec<MaskingPlan> {
    records
        .iter()
        .map(|r| {
            let mut rng = substream(seed, r.sentence_id, PLAN_STREAM);
            build_masking_plan(r, lexicon, config, &mut rng)
        })
        .collect()
}

pub fn training_line(record: &ErrorRecord, plan: &MaskingPlan) -> String {
    let original = record.original_tokens().join(" ");
    let corrupted = plan.apply(&record.tokens).join(" ");
    let codes: Vec<String> = plan.actions.iter().map(|a| a.code().to_string()).collect();
    let flags: Vec<&str> = plan.loss.iter().map(|&l| if l { "1" } else { "0" }).collect();
    format!("{original}\t{corrupted}\t{}\t{}", codes.join(" "), flags.join(" "))
}

pub fn emit_training_file<W: Write>(
    records: &[ErrorRecord],
    plans: &[MaskingPlan],
    mut out: W,
) -> Result<(), PlanError> {
    if records.len() != plans.len() {
        return Err(PlanError::Misaligned {
            records: records.len(),
            plans: plans.len(),
        });
    }
    for (r, p) in records.iter().zip(plans) {
        writeln!(out, "{}", training_line(r, p))?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::errorgen::{Category, ErrorType, InjectedError};
    use rand::SeedableRng;

    fn record(id: u64, words: &[&str], error: Option<usize>) -> ErrorRecord {
        let tokens: Vec<String> = words.iter().map(|s| s.to_string()).collect();
        let error = error.map(|i| InjectedError {
            index: i,
            original: format!("{}x", tokens[i]),
            corrupted: tokens[i].clone(),
            category: Category::Nonreal,
            etype: ErrorType::Keyboard,
        });
        ErrorRecord {
            sentence_id: id,
            tokens,
            error,
        }
    }

    fn lexicon() -> Lexicon {
        Lexicon::from_words(["a", "b", "c", "d", "e", "f"])
    }

    #[test]
    fn codes_roundtrip() {
        for a in [
            MaskAction::Mask,
            MaskAction::RandomReplace,
            MaskAction::Keep,
            MaskAction::None,
        ] {
            assert_eq!(MaskAction::from_code(a.code()), Some(a));
        }
        assert_eq!(MaskAction::from_code('x'), None);
    }

    #[test]
    fn config_checks() {
        assert!(MaskingConfig::default().validate().is_ok());
        let bad = MaskingConfig {
            p_keep: 0.2,
            ..Default::default()
        };
        assert!(matches!(bad.validate(), Err(PlanError::Split(_))));
        let bad = MaskingConfig {
            p_select: 1.5,
            ..Default::default()
        };
        assert!(matches!(bad.validate(), Err(PlanError::Probability { .. })));
    }

    #[test]
    fn error_position_always_in_loss() {
        let l = lexicon();
        let r = record(0, &["a", "b", "c", "d"], Some(2));
        for seed in 0..2000 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = build_masking_plan(&r, &l, &MaskingConfig::default(), &mut rng);
            assert!(p.loss[2]);
            assert_ne!(p.actions[2], MaskAction::None);
        }
    }

    #[test]
    fn unselected_sentence() {
        let l = lexicon();
        let r = record(0, &["a", "b", "c"], None);
        let seed = (0..)
            .find(|&s| {
                let mut rng = ChaCha8Rng::seed_from_u64(s);
                build_masking_plan(&r, &l, &MaskingConfig::default(), &mut rng)
                    .actions
                    .iter()
                    .all(|a| *a == MaskAction::None)
            })
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = build_masking_plan(&r, &l, &MaskingConfig::default(), &mut rng);
        assert!(p.loss.iter().all(|l| !l));
        assert_eq!(p.apply(&r.tokens), r.tokens);
    }

    #[test]
    fn selection_and_split_frequencies() {
        let l = lexicon();
        let words = ["a", "b", "c", "d", "e", "f", "a", "b", "c", "d"];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (mut total, mut selected) = (0u64, 0u64);
        let mut counts = [0u64; 3];
        for id in 0..100_000 {
            let r = record(id, &words, None);
            let p = build_masking_plan(&r, &l, &MaskingConfig::default(), &mut rng);
            for (a, lf) in p.actions.iter().zip(&p.loss) {
                total += 1;
                assert_eq!(*lf, *a != MaskAction::None);
                match a {
                    MaskAction::Mask => counts[0] += 1,
                    MaskAction::RandomReplace => counts[1] += 1,
                    MaskAction::Keep => counts[2] += 1,
                    MaskAction::None => continue,
                }
                selected += 1;
            }
        }
        assert_eq!(total, 1_000_000);
        let frac = selected as f64 / total as f64;
        assert!((frac - 0.15).abs() <= 0.003, "{frac}");
        for (c, want) in counts.iter().zip([0.8, 0.1, 0.1]) {
            let got = *c as f64 / selected as f64;
            assert!((got - want).abs() <= 0.01, "{got} vs {want}");
        }
    }

    #[test]
    fn random_replacement_differs() {
        let l = lexicon();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let w = random_other(&l, "c", &mut rng).unwrap();
            assert_ne!(w, "c");
            assert!(l.contains(&w));
        }
        let single = Lexicon::from_words(["a"]);
        assert_eq!(random_other(&single, "a", &mut rng), None);
        assert_eq!(random_other(&single, "z", &mut rng).as_deref(), Some("a"));
    }

    #[test]
    fn training_file_shape() {
        let l = lexicon();
        let records: Vec<ErrorRecord> = (0..100)
            .map(|i| record(i, &["a", "b", "c", "d", "e"], Some((i % 5) as usize)))
            .collect();
        let plans = plan_records(&records, &l, &MaskingConfig::default(), 5);
        let mut buf = Vec::new();
        emit_training_file(&records, &plans, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 100);
        for (line, r) in text.lines().zip(&records) {
            let cols: Vec<&str> = line.split('\t').collect();
            assert_eq!(cols.len(), 4);
            let counts: Vec<usize> = cols.iter().map(|c| c.split(' ').count()).collect();
            assert!(counts.iter().all(|&c| c == 5), "{counts:?}");
            assert_eq!(cols[0], r.original_tokens().join(" "));
            let flags: Vec<&str> = cols[3].split(' ').collect();
            assert_eq!(flags[r.error_index().unwrap()], "1");
        }
        let mut again = Vec::new();
        emit_training_file(
            &records,
            &plan_records(&records, &l, &MaskingConfig::default(), 5),
            &mut again,
        )
        .unwrap();
        assert_eq!(buf, again);
        assert!(matches!(
            emit_training_file(&records, &plans[..3], Vec::new()),
            Err(PlanError::Misaligned { .. })
        ));
    }
}
