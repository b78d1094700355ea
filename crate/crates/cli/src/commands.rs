use std::collections::HashSet;
use std::io::Write as _;
use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use misspell::biasplan::{emit_training_file, plan_records, MaskingConfig};
use misspell::corrector::{
    write_predictions, Corrector, CorrectorConfig, Decision, DetectionMode, Prediction, Reason, Strategy, Target,
};
use misspell::errorgen::{
    build_dataset, eval_retention_filter, eval_site, read_records, write_records, CorruptionConfig, DatasetStats,
    ErrorRecord, EvalSite, GenContext,
};
use misspell::evaluation::{
    diagnostics, evaluate, threshold_sweep, write_diagnostics_csv, write_sweep_csv, zwnj_ablation, CandidateStats,
    EvalReport, SweepPoint, Timing,
};
use misspell::scorer::{NgramModel, NgramScorer, OracleScorer, RemoteConfig, RemoteScorer, Scorer, UnigramScorer};
use misspell::textnorm::tokenize;
use misspell::{ConfusionIndex, HomophoneMap, KeyboardAdjacency, Lexicon};

use crate::{
    create, lines, open, sidecar, with_jobs, write_file, write_json, BuildArgs, CliError, CorrectArgs, CorruptArgs,
    EvaluateArgs, Index, Result, ScorerArgs, ScorerKind, SweepArgs,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BuildSummary {
    pub words: usize,
    pub confusable_words: usize,
    pub pairs: usize,
}

pub fn cmd_build(args: &BuildArgs) -> Result<BuildSummary> {
    let data = |e: &dyn std::fmt::Display| CliError::Data(e.to_string());
    let lexicon = Lexicon::load(&args.dictionary).map_err(|e| data(&e))?;
    if lexicon.is_empty() {
        return Err(CliError::Data(format!("{}: no words", args.dictionary.display())));
    }
    let adjacency = match &args.keyboard {
        Some(p) => KeyboardAdjacency::load(p).map_err(|e| data(&e))?,
        None => KeyboardAdjacency::persian_standard(),
    };
    let homophones = match &args.homophones {
        Some(p) => HomophoneMap::load(p).map_err(|e| data(&e))?,
        None => HomophoneMap::persian(),
    };
    let confusion = with_jobs(args.jobs, || ConfusionIndex::build(&lexicon, &adjacency, &homophones))?;
    let index = Index {
        lexicon,
        adjacency,
        homophones,
        confusion,
    };
    index.write(&args.out, args.tsv)?;
    let summary = BuildSummary {
        words: index.lexicon.len(),
        confusable_words: index.confusion.len(),
        pairs: index.confusion.pair_count(),
    };
    println!(
        "lexicon: {} words; confusion index: {} words, {} pairs -> {}",
        summary.words,
        summary.confusable_words,
        summary.pairs,
        args.out.display()
    );
    Ok(summary)
}

pub fn cmd_corrupt(args: &CorruptArgs) -> Result<DatasetStats> {
    let index = Index::load(&args.index)?;
    let config = CorruptionConfig {
        p_unchanged: args.p_unchanged,
        p_homophone_real: args.p_homophone_real,
        p_real_branch: args.p_real_branch,
        repetitions: args.repetitions,
        seed: args.seed,
        ..Default::default()
    };
    config.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let ctx = GenContext {
        lexicon: &index.lexicon,
        adjacency: &index.adjacency,
        homophones: &index.homophones,
    };
    let corpus = lines(&args.corpus)?;
    let dataset = with_jobs(args.jobs, || build_dataset(corpus, &config, &ctx, args.zwnj))?
        .map_err(|e| CliError::Data(format!("{}: {e}", args.corpus.display())))?;
    let mut stats = dataset.stats.clone();
    let records = if args.eval_filter {
        let kept = eval_retention_filter(dataset.records, &index.confusion);
        let pruning = std::mem::take(&mut stats.pruning);
        let infeasible = stats.infeasible;
        stats = DatasetStats::from_records(&kept);
        stats.pruning = pruning;
        stats.infeasible = infeasible;
        kept
    } else {
        dataset.records
    };

    write_file(&args.out, |w| write_records(&records, w))?;
    let stats_path = args.stats.clone().unwrap_or_else(|| sidecar(&args.out, ".stats.tsv"));
    write_file(&stats_path, |w| stats.write_tsv(w))?;
    if let Some(path) = &args.rejects {
        write_file(path, |w| {
            for (line, reason) in &dataset.rejected {
                writeln!(w, "{line}\t{reason}")?;
            }
            Ok(())
        })?;
    }
    if let Some(path) = &args.training_out {
        let masking = MaskingConfig::default();
        let plans = plan_records(&records, &index.lexicon, &masking, args.plan_seed.unwrap_or(args.seed));
        let mut w = create(path)?;
        emit_training_file(&records, &plans, &mut w).map_err(|e| CliError::io(path, e))?;
    }
    println!(
        "{} records ({} unchanged) from {} of {} lines -> {}",
        stats.total,
        stats.unchanged,
        stats.pruning.accepted,
        stats.pruning.lines,
        args.out.display()
    );
    Ok(stats)
}

fn read_dataset(path: &Path) -> Result<Vec<ErrorRecord>> {
    read_records(open(path)?).map_err(|e| CliError::io(path, e))
}

pub fn build_scorer(args: &ScorerArgs, index: &Index, records: &[ErrorRecord]) -> Result<Box<dyn Scorer>> {
    Ok(match args.scorer {
        ScorerKind::Ngram => {
            let path = args
                .lm_corpus
                .as_ref()
                .ok_or_else(|| CliError::Config("--scorer ngram needs --lm-corpus".into()))?;
            if args.ngram_order == 0 || args.ngram_alpha.is_nan() || args.ngram_alpha <= 0.0 {
                return Err(CliError::Config(
                    "--ngram-order must be >= 1 and --ngram-alpha > 0".into(),
                ));
            }
            let mut model = NgramModel::new(args.ngram_order, args.ngram_alpha);
            for line in lines(path)? {
                let line = line.map_err(|e| CliError::io(path, e))?;
                model.add_sentence(&tokenize(&line).tokens);
            }
            if model.is_empty() {
                return Err(CliError::Data(format!("{}: no tokens to train on", path.display())));
            }
            Box::new(NgramScorer::new(model).with_normalization(args.ngram_norm))
        }
        ScorerKind::Unigram => Box::new(UnigramScorer::from_lexicon(&index.lexicon)),
        ScorerKind::Oracle => Box::new(OracleScorer::from_records(records)),
        ScorerKind::Remote => {
            let scorer = RemoteScorer::new(RemoteConfig {
                base_url: args.service_url.clone(),
                timeout: Duration::from_secs_f64(args.timeout_secs.max(0.001)),
                retries: args.retries,
                ..Default::default()
            });
            match scorer.health() {
                Ok(true) => {}
                Ok(false) => log::warn!("scoring service at {} is not ready", args.service_url),
                Err(e) => log::warn!("scoring service at {} unreachable: {e}", args.service_url),
            }
            Box::new(scorer)
        }
    })
}

/// Runs the corrector over `records`: at the judged position of each record
/// in oracle mode (records without one are skipped), at every token in scan
/// mode. Returns the predictions in input order and the skipped count.
pub fn correct_records(corrector: &Corrector<'_>, records: &[ErrorRecord], index: &Index) -> (Vec<Prediction>, usize) {
    let mode = corrector.config().detection_mode;
    let per_record: Vec<Option<Vec<Prediction>>> = records
        .par_iter()
        .map(|r| {
            let target = match mode {
                DetectionMode::Oracle => {
                    Target::Index(eval_site(r, &index.confusion, &index.adjacency, &index.homophones)?.index)
                }
                DetectionMode::Scan => Target::All,
            };
            match corrector.correct_sentence(&r.tokens, target) {
                Ok(c) => Some(
                    c.suggestions
                        .into_iter()
                        .map(|suggestion| Prediction {
                            sentence_id: r.sentence_id,
                            suggestion,
                        })
                        .collect(),
                ),
                Err(e) => {
                    log::warn!("sentence {}: {e}", r.sentence_id);
                    None
                }
            }
        })
        .collect();
    let skipped = per_record.iter().filter(|p| p.is_none()).count();
    (per_record.into_iter().flatten().flatten().collect(), skipped)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrectSummary {
    pub rows: usize,
    pub replaced: usize,
    pub scorer_failures: usize,
    pub skipped: usize,
    pub candidates: CandidateStats,
    pub timing: Timing,
}

pub fn cmd_correct(args: &CorrectArgs) -> Result<CorrectSummary> {
    let index = Index::load(&args.index)?;
    let records = read_dataset(&args.input)?;
    let scorer = build_scorer(&args.scorer, &index, &records)?;
    let config = CorrectorConfig {
        threshold_k: args.threshold,
        strategy: args.strategy,
        detection_mode: args.mode,
        baseline_v1_topn: args.topn,
        ..Default::default()
    };
    let corrector = Corrector::new(&index.lexicon, &index.confusion, scorer.as_ref(), config.clone())
        .map_err(|e| CliError::Config(e.to_string()))?;

    let start = Instant::now();
    let (predictions, skipped) = with_jobs(args.jobs, || correct_records(&corrector, &records, &index))?;
    let timing = Timing::new(start.elapsed(), records.len() as u64);

    write_file(&args.out, |w| write_predictions(&predictions, w))?;
    let summary = CorrectSummary {
        rows: predictions.len(),
        replaced: predictions.iter().filter(|p| p.suggestion.is_replaced()).count(),
        scorer_failures: predictions
            .iter()
            .filter(|p| p.suggestion.reason == Reason::ScorerFailure)
            .count(),
        skipped,
        candidates: CandidateStats::from_counts(predictions.iter().map(|p| p.suggestion.candidates)),
        timing,
    };
    let meta = json!({
        "command": "correct",
        "input": args.input,
        "index": args.index,
        "scorer": format!("{:?}", args.scorer.scorer).to_lowercase(),
        "lm_corpus": args.scorer.lm_corpus,
        "ngram_order": args.scorer.ngram_order,
        "ngram_alpha": args.scorer.ngram_alpha,
        "ngram_norm": args.scorer.ngram_norm,
        "service_url": args.scorer.service_url,
        "corrector": config,
        "summary": summary,
        "candidate_counts": predictions.iter().map(|p| p.suggestion.candidates).collect::<Vec<_>>(),
    });
    write_json(
        &args.meta.clone().unwrap_or_else(|| sidecar(&args.out, ".meta.json")),
        &meta,
    )?;

    println!(
        "{} rows, {} replaced, {} scorer failures, {} skipped in {:.2} min -> {}",
        summary.rows,
        summary.replaced,
        summary.scorer_failures,
        summary.skipped,
        timing.wall_minutes,
        args.out.display()
    );
    if summary.scorer_failures > 0 {
        let msg = format!("{} scorer failures; affected words were kept", summary.scorer_failures);
        if args.hard_fail {
            return Err(CliError::Transport(msg));
        }
        log::warn!("{msg}");
    }
    Ok(summary)
}

/// Gold records that have a judged position, their sites, and the ids of
/// the rest.
pub fn judged_subset(records: Vec<ErrorRecord>, index: &Index) -> (Vec<ErrorRecord>, Vec<EvalSite>, HashSet<u64>) {
    let mut gold = Vec::with_capacity(records.len());
    let mut sites = Vec::with_capacity(records.len());
    let mut unjudged = HashSet::new();
    for r in records {
        match eval_site(&r, &index.confusion, &index.adjacency, &index.homophones) {
            Some(s) => {
                sites.push(s);
                gold.push(r);
            }
            None => {
                unjudged.insert(r.sentence_id);
            }
        }
    }
    (gold, sites, unjudged)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum EvalOutput {
    Single(Box<EvalReport>),
    Paired {
        raw: Box<EvalReport>,
        stripped: Box<EvalReport>,
    },
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<EvalOutput> {
    let index = Index::load(&args.index)?;
    let (gold, sites, unjudged) = judged_subset(read_dataset(&args.gold)?, &index);
    let path = &args.predictions;
    let predictions: Vec<Prediction> = misspell::corrector::read_predictions(open(path)?)
        .map_err(|e| CliError::io(path, e))?
        .into_iter()
        .filter(|p| !unjudged.contains(&p.sentence_id))
        .collect();
    let data = |e: misspell::evaluation::EvalError| CliError::Data(format!("{}: {e}", path.display()));

    let meta_path = sidecar(path, ".meta.json");
    let run_meta: Option<serde_json::Value> = std::fs::read_to_string(&meta_path)
        .ok()
        .and_then(|t| serde_json::from_str(&t).ok());
    let decorate = |mut r: EvalReport| {
        if let Some(m) = &run_meta {
            r.candidates = serde_json::from_value(m["summary"]["candidates"].clone()).ok();
            r.timing = serde_json::from_value(m["summary"]["timing"].clone()).ok();
        }
        r.metadata = json!({
            "command": "evaluate",
            "gold": args.gold,
            "predictions": args.predictions,
            "index": args.index,
            "zwnj": r.zwnj_mode,
            "unjudged_records": unjudged.len(),
            "run": run_meta.as_ref().map(|m| m.get("corrector").cloned()),
        });
        r
    };

    let output = if args.zwnj_ablation {
        let (raw, stripped) = zwnj_ablation(&gold, &sites, &predictions).map_err(data)?;
        EvalOutput::Paired {
            raw: Box::new(decorate(raw)),
            stripped: Box::new(decorate(stripped)),
        }
    } else {
        EvalOutput::Single(Box::new(decorate(
            evaluate(&gold, &sites, &predictions, args.zwnj).map_err(data)?,
        )))
    };
    write_json(&args.out, &output)?;
    if let Some(diag) = &args.diagnostics {
        let rows = diagnostics(&gold, &sites, &predictions, args.zwnj).map_err(data)?;
        write_file(diag, |w| write_diagnostics_csv(&rows, w))?;
    }
    let headline: &EvalReport = match &output {
        EvalOutput::Single(r) => r,
        EvalOutput::Paired { raw, .. } => raw,
    };
    println!(
        "{} records judged; micro P/R/F1 {:?}/{:?}/{:?} -> {}",
        headline.records,
        headline.overall.micro.precision,
        headline.overall.micro.recall,
        headline.overall.micro.f1,
        args.out.display()
    );
    Ok(output)
}

/// Scores every judged position once with the threshold left open.
pub fn score_decisions(corrector: &Corrector<'_>, gold: &[ErrorRecord], sites: &[EvalSite]) -> Vec<(u64, Decision)> {
    gold.par_iter()
        .zip(sites.par_iter())
        .map(|(r, s)| {
            let d = corrector
                .decision_at(&r.tokens, s.index)
                .expect("judged positions are in range");
            (r.sentence_id, d)
        })
        .collect()
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<Vec<SweepPoint>> {
    if args.thresholds.is_empty() {
        return Err(CliError::Config("--thresholds is empty".into()));
    }
    if let Some(k) = args.thresholds.iter().find(|k| !(**k > 0.0 && **k <= 1.0)) {
        return Err(CliError::Config(format!("threshold {k} is not in (0, 1]")));
    }
    let index = Index::load(&args.index)?;
    let (gold, sites, _) = judged_subset(read_dataset(&args.input)?, &index);
    let scorer = build_scorer(&args.scorer, &index, &gold)?;
    let config = CorrectorConfig {
        strategy: Strategy::Proposed,
        ..Default::default()
    };
    let corrector = Corrector::new(&index.lexicon, &index.confusion, scorer.as_ref(), config.clone())
        .map_err(|e| CliError::Config(e.to_string()))?;
    let decisions = with_jobs(args.jobs, || score_decisions(&corrector, &gold, &sites))?;
    let points = threshold_sweep(&gold, &sites, &decisions, &args.thresholds, config.max_distance)
        .map_err(|e| CliError::Data(e.to_string()))?;
    write_file(&args.out, |w| write_sweep_csv(&points, w))?;
    if let Some(path) = &args.report {
        write_json(path, &points)?;
    }
    println!(
        "{} thresholds over {} records -> {}",
        points.len(),
        gold.len(),
        args.out.display()
    );
    Ok(points)
}
