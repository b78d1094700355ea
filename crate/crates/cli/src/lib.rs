//! Experiment harness behind the `misspell` binary.
//!
//! `build` turns a dictionary and letter maps into an index directory,
//! `corrupt` prunes a corpus and plants labeled errors, `correct` writes
//! predictions, `evaluate` judges them and `sweep` re-thresholds one scoring
//! pass over a grid of `K` values. Flags may also come from `MISSPELL_*`
//! environment variables; flags win.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use misspell::corrector::{DetectionMode, Strategy, DEFAULT_THRESHOLD, DEFAULT_TOPN};
use misspell::scorer::Normalization;
use misspell::textnorm::ZwnjMode;

pub mod commands;
pub mod index;

pub use commands::{cmd_build, cmd_correct, cmd_corrupt, cmd_evaluate, cmd_sweep};
pub use index::Index;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Transport(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Data(_) => 3,
            Self::Transport(_) => 4,
        }
    }

    pub(crate) fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Self::Data(format!("{}: {e}", path.display()))
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "misspell",
    version,
    about = "Real-word and non-real-word misspelling correction experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the lexicon and confusion index from a dictionary and letter maps.
    Build(BuildArgs),
    /// Prune a corpus and plant one labeled error per sentence.
    Corrupt(CorruptArgs),
    /// Run a correction strategy over a labeled dataset.
    Correct(CorrectArgs),
    /// Judge predictions against the labeled dataset.
    Evaluate(EvaluateArgs),
    /// Score once and re-threshold the real-word pipeline over a grid.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// Dictionary: one word per line, optionally `word<TAB>frequency`.
    #[arg(long, env = "MISSPELL_DICTIONARY")]
    pub dictionary: PathBuf,
    /// Keyboard adjacency file [default: built-in Persian layout].
    #[arg(long, env = "MISSPELL_KEYBOARD")]
    pub keyboard: Option<PathBuf>,
    /// Homophone file [default: built-in Persian groups].
    #[arg(long, env = "MISSPELL_HOMOPHONES")]
    pub homophones: Option<PathBuf>,
    /// Output index directory.
    #[arg(long, env = "MISSPELL_INDEX")]
    pub out: PathBuf,
    /// Also write the confusion index as TSV.
    #[arg(long)]
    pub tsv: bool,
    #[arg(long, env = "MISSPELL_JOBS")]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CorruptArgs {
    /// Index directory written by `build`.
    #[arg(long, env = "MISSPELL_INDEX")]
    pub index: PathBuf,
    /// Raw corpus, one sentence per line.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Output dataset TSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Statistics TSV [default: <out>.stats.tsv].
    #[arg(long)]
    pub stats: Option<PathBuf>,
    /// Rejected line numbers and reasons.
    #[arg(long)]
    pub rejects: Option<PathBuf>,
    #[arg(long, default_value_t = 0, env = "MISSPELL_SEED")]
    pub seed: u64,
    /// Passes over the pruned corpus; passes are appended.
    #[arg(long, default_value_t = 1)]
    pub repetitions: u32,
    #[arg(long, default_value_t = 0.5)]
    pub p_unchanged: f64,
    #[arg(long, default_value_t = 0.8)]
    pub p_homophone_real: f64,
    #[arg(long, default_value_t = 0.5)]
    pub p_real_branch: f64,
    #[arg(long, default_value = "preserve", env = "MISSPELL_ZWNJ")]
    pub zwnj: ZwnjMode,
    /// Drop unchanged records that have no confusable token to probe.
    #[arg(long)]
    pub eval_filter: bool,
    /// Also write a masking-plan training file.
    #[arg(long)]
    pub training_out: Option<PathBuf>,
    /// Seed for the masking plans [default: --seed].
    #[arg(long)]
    pub plan_seed: Option<u64>,
    #[arg(long, env = "MISSPELL_JOBS")]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScorerKind {
    Ngram,
    Unigram,
    Remote,
    Oracle,
}

#[derive(Debug, Clone, Args)]
pub struct ScorerArgs {
    #[arg(long, value_enum, default_value = "ngram", env = "MISSPELL_SCORER")]
    pub scorer: ScorerKind,
    /// Training text for the n-gram scorer, one sentence per line.
    #[arg(long, env = "MISSPELL_LM_CORPUS")]
    pub lm_corpus: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    pub ngram_order: usize,
    /// Additive smoothing constant.
    #[arg(long, default_value_t = 0.1)]
    pub ngram_alpha: f64,
    /// Divide n-gram slot scores by the candidate-set mass or by the whole
    /// vocabulary's (candidates|vocabulary).
    #[arg(long, default_value = "candidates")]
    pub ngram_norm: Normalization,
    #[arg(long, default_value = "http://127.0.0.1:8000", env = "MISSPELL_SERVICE_URL")]
    pub service_url: String,
    #[arg(long, default_value_t = 30.0)]
    pub timeout_secs: f64,
    /// Retries after a retryable transport failure.
    #[arg(long, default_value_t = 3)]
    pub retries: u32,
}

#[derive(Debug, Args)]
pub struct CorrectArgs {
    #[arg(long, env = "MISSPELL_INDEX")]
    pub index: PathBuf,
    /// Dataset TSV written by `corrupt`.
    #[arg(long)]
    pub input: PathBuf,
    /// Predictions TSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Run metadata JSON [default: <out>.meta.json].
    #[arg(long)]
    pub meta: Option<PathBuf>,
    #[command(flatten)]
    pub scorer: ScorerArgs,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD, env = "MISSPELL_THRESHOLD")]
    pub threshold: f64,
    #[arg(long, default_value = "proposed", env = "MISSPELL_STRATEGY")]
    pub strategy: Strategy,
    #[arg(long, default_value = "oracle")]
    pub mode: DetectionMode,
    /// Open-vocabulary suggestions considered by baseline_v1.
    #[arg(long, default_value_t = DEFAULT_TOPN)]
    pub topn: usize,
    /// Exit with the transport code if any scorer call failed.
    #[arg(long)]
    pub hard_fail: bool,
    #[arg(long, env = "MISSPELL_JOBS")]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long, env = "MISSPELL_INDEX")]
    pub index: PathBuf,
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub predictions: PathBuf,
    /// Report JSON.
    #[arg(long)]
    pub out: PathBuf,
    /// Missed-error histogram CSV.
    #[arg(long)]
    pub diagnostics: Option<PathBuf>,
    #[arg(long, default_value = "preserve", env = "MISSPELL_ZWNJ")]
    pub zwnj: ZwnjMode,
    /// Emit paired raw and ZWNJ-stripped reports.
    #[arg(long)]
    pub zwnj_ablation: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, env = "MISSPELL_INDEX")]
    pub index: PathBuf,
    /// Dataset TSV written by `corrupt`.
    #[arg(long)]
    pub input: PathBuf,
    /// Precision/recall CSV, one row per threshold.
    #[arg(long)]
    pub out: PathBuf,
    /// Full sweep points as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub scorer: ScorerArgs,
    #[arg(long, value_delimiter = ',', default_values_t = misspell::evaluation::DEFAULT_SWEEP)]
    pub thresholds: Vec<f64>,
    #[arg(long, env = "MISSPELL_JOBS")]
    pub jobs: Option<usize>,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Build(a) => cmd_build(&a).map(|_| ()),
        Command::Corrupt(a) => cmd_corrupt(&a).map(|_| ()),
        Command::Correct(a) => cmd_correct(&a).map(|_| ()),
        Command::Evaluate(a) => cmd_evaluate(&a).map(|_| ()),
        Command::Sweep(a) => cmd_sweep(&a).map(|_| ()),
    }
}

/// Runs `f` on a pool of `jobs` threads (all cores when `None`).
pub(crate) fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

pub(crate) fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| CliError::io(path, e))
}

pub(crate) fn lines(path: &Path) -> Result<impl Iterator<Item = std::io::Result<String>>> {
    Ok(open(path)?.lines())
}

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

/// Writes through `f` and flushes, attributing failures to `path`.
pub(crate) fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let mut w = create(path)?;
    f(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))
}

pub(crate) fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    write_file(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)
    })
}

/// `path` with `suffix` appended to its file name.
pub(crate) fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}
