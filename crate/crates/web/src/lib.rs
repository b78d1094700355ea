//! Browser playground over a small embedded Persian lexicon and a bigram
//! model trained on a few dozen sentences.
//!
//! Every method returns a JSON string; the page in `www/` renders it.

use serde::Serialize;
use serde_json::json;
use wasm_bindgen::prelude::*;

use misspell::confusion::relation;
use misspell::corrector::{Corrector, CorrectorConfig, DetectionMode, Suggestion, Target};
use misspell::editdist::levenshtein_table;
use misspell::scorer::{NgramModel, NgramScorer, Normalization};
use misspell::textnorm::tokenize;
use misspell::{ConfusionIndex, HomophoneMap, KeyboardAdjacency, Lexicon};

const SENTENCES: &str = include_str!("../data/sentences.txt");
const EXTRA_WORDS: &str = include_str!("../data/extra_words.txt");

#[derive(Serialize)]
struct Confusable {
    word: String,
    relation: &'static str,
}

#[derive(Serialize)]
struct Correction {
    tokens: Vec<String>,
    corrected: Vec<String>,
    suggestions: Vec<Suggestion>,
}

#[wasm_bindgen]
pub struct Playground {
    lexicon: Lexicon,
    confusion: ConfusionIndex,
    adjacency: KeyboardAdjacency,
    homophones: HomophoneMap,
    scorer: NgramScorer,
}

impl Default for Playground {
    fn default() -> Self {
        Self::new()
    }
}

#[wasm_bindgen]
impl Playground {
    #[wasm_bindgen(constructor)]
    pub fn new() -> Playground {
        let sentences: Vec<Vec<String>> = SENTENCES.lines().map(|l| tokenize(l).tokens).collect();
        let words = sentences
            .iter()
            .flatten()
            .cloned()
            .chain(EXTRA_WORDS.lines().map(str::to_owned));
        let lexicon = Lexicon::from_words(words);
        let adjacency = KeyboardAdjacency::persian_standard();
        let homophones = HomophoneMap::persian();
        let confusion = ConfusionIndex::build(&lexicon, &adjacency, &homophones);
        // vocabulary normalization keeps the threshold an absolute probability
        let scorer = NgramScorer::new(NgramModel::train(2, 0.1, sentences.iter().map(Vec::as_slice)))
            .with_normalization(Normalization::Vocabulary);
        Playground {
            lexicon,
            confusion,
            adjacency,
            homophones,
            scorer,
        }
    }

    /// Lexicon words, sorted.
    pub fn words(&self) -> String {
        json!(self.lexicon.words().collect::<Vec<_>>()).to_string()
    }

    /// Levenshtein distance with its full table.
    pub fn distance(&self, a: &str, b: &str) -> String {
        let (ac, bc): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
        let table = levenshtein_table(&ac, &bc);
        json!({
            "a": ac,
            "b": bc,
            "distance": table[ac.len()][bc.len()],
            "table": table,
        })
        .to_string()
    }

    /// Distance-1 and transposition neighbors in the lexicon, and the
    /// word's confusion set labeled by relation.
    pub fn candidates(&self, word: &str) -> String {
        let word = word.trim();
        let confusion: Vec<Confusable> = self
            .confusion
            .confusion_set(word)
            .iter()
            .map(|c| Confusable {
                word: c.clone(),
                relation: relation(word, c, &self.adjacency, &self.homophones)
                    .primary_type()
                    .map_or("", |t| t.as_str()),
            })
            .collect();
        json!({
            "word": word,
            "in_lexicon": self.lexicon.contains(word),
            "distance1": self.lexicon.candidates_distance1(word),
            "swaps": self.lexicon.candidates_adjacent_swap(word),
            "confusion": confusion,
        })
        .to_string()
    }

    /// Corrects every token of `text` at real-word threshold `threshold`.
    pub fn correct(&self, text: &str, threshold: f64) -> String {
        let tokens = tokenize(text).tokens;
        if tokens.is_empty() {
            return json!({ "error": "no words to correct" }).to_string();
        }
        let config = CorrectorConfig {
            threshold_k: threshold,
            detection_mode: DetectionMode::Scan,
            ..Default::default()
        };
        let result = Corrector::new(&self.lexicon, &self.confusion, &self.scorer, config)
            .and_then(|c| c.correct_sentence(&tokens, Target::All));
        match result {
            Ok(c) => serde_json::to_string(&Correction {
                tokens,
                corrected: c.corrected,
                suggestions: c.suggestions,
            })
            .unwrap_or_default(),
            Err(e) => json!({ "error": e.to_string() }).to_string(),
        }
    }
}
