//! Misspelling correction for real-word and non-real-word errors.
//!
//! Candidates come from edit-distance queries against a dictionary
//! ([`lexicon`]) and a precomputed real-word confusion index
//! ([`confusion`]); a pluggable masked-language-model [`scorer`] ranks them
//! in context. [`errorgen`] builds labeled corpora, [`evaluation`] scores
//! predictions against them, and [`biasplan`] emits masking schedules for
//! fine-tuning an external model.

pub mod biasplan;
pub mod confusion;
pub mod corrector;
pub mod editdist;
pub mod errorgen;
pub mod evaluation;
pub mod letters;
pub mod lexicon;
pub mod scorer;
pub mod textnorm;

pub use confusion::ConfusionIndex;
pub use corrector::{Corrector, CorrectorConfig, Suggestion};
pub use errorgen::{CorruptionConfig, ErrorRecord};
pub use letters::{HomophoneMap, KeyboardAdjacency};
pub use lexicon::Lexicon;
pub use scorer::Scorer;
