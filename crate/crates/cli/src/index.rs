//! The index directory shared by every subcommand.

use std::path::Path;

use misspell::{ConfusionIndex, HomophoneMap, KeyboardAdjacency, Lexicon};

use crate::{write_file, CliError, Result};

pub const LEXICON_FILE: &str = "lexicon.tsv";
pub const KEYBOARD_FILE: &str = "keyboard.tsv";
pub const HOMOPHONES_FILE: &str = "homophones.tsv";
pub const CONFUSION_FILE: &str = "confusion.bin";
pub const CONFUSION_TSV_FILE: &str = "confusion.tsv";

#[derive(Debug, Clone)]
pub struct Index {
    pub lexicon: Lexicon,
    pub adjacency: KeyboardAdjacency,
    pub homophones: HomophoneMap,
    pub confusion: ConfusionIndex,
}

impl Index {
    pub fn load(dir: &Path) -> Result<Self> {
        let data = |e: &dyn std::fmt::Display| CliError::Data(e.to_string());
        Ok(Self {
            lexicon: Lexicon::load(dir.join(LEXICON_FILE)).map_err(|e| data(&e))?,
            adjacency: KeyboardAdjacency::load(dir.join(KEYBOARD_FILE)).map_err(|e| data(&e))?,
            homophones: HomophoneMap::load(dir.join(HOMOPHONES_FILE)).map_err(|e| data(&e))?,
            confusion: ConfusionIndex::load(dir.join(CONFUSION_FILE)).map_err(|e| data(&e))?,
        })
    }

    /// Writes every artifact; the confusion index also as TSV when `tsv`.
    pub fn write(&self, dir: &Path, tsv: bool) -> Result<()> {
        write_file(&dir.join(LEXICON_FILE), |w| self.lexicon.write_tsv(w))?;
        write_file(&dir.join(KEYBOARD_FILE), |w| self.adjacency.write_tsv(w))?;
        write_file(&dir.join(HOMOPHONES_FILE), |w| self.homophones.write_tsv(w))?;
        write_file(&dir.join(CONFUSION_FILE), |w| self.confusion.write_binary(w))?;
        if tsv {
            let path = dir.join(CONFUSION_TSV_FILE);
            let mut buf = Vec::new();
            self.confusion.write_tsv(&mut buf).map_err(|e| CliError::io(&path, e))?;
            write_file(&path, |w| std::io::Write::write_all(w, &buf))?;
        }
        Ok(())
    }
}
