mod common;

use std::fs;

use common::{cli, fixture, s, write_lines};
use misspell::corrector::{read_predictions, Action};
use misspell::errorgen::read_records;

fn digest(path: &std::path::Path) -> Vec<u8> {
    fs::read(path).unwrap()
}

#[test]
fn build_small_dictionary() {
    let dir = tempfile::tempdir().unwrap();
    let dict = dir.path().join("d.txt");
    let words: Vec<String> = ["سوت", "صوت", "ثبات", "سبات", "کتاب", "کتب", "است", "این", "و", "تصویر"]
        .iter()
        .map(|w| w.to_string())
        .collect();
    write_lines(&dict, &words);
    let out = dir.path().join("idx");
    let args = ["build", "--dictionary", s(&dict), "--out", s(&out), "--tsv"];
    cli(&args).unwrap();
    for f in [
        "lexicon.tsv",
        "keyboard.tsv",
        "homophones.tsv",
        "confusion.bin",
        "confusion.tsv",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
    let tsv = fs::read_to_string(out.join("confusion.tsv")).unwrap();
    assert!(
        tsv.lines().any(|l| l.starts_with("سوت\t") && l.contains("صوت")),
        "{tsv}"
    );

    let first = digest(&out.join("confusion.bin"));
    let lex = digest(&out.join("lexicon.tsv"));
    cli(&args).unwrap();
    assert_eq!(digest(&out.join("confusion.bin")), first);
    assert_eq!(digest(&out.join("lexicon.tsv")), lex);
}

#[test]
fn build_missing_keyboard_file() {
    let dir = tempfile::tempdir().unwrap();
    let dict = dir.path().join("d.txt");
    write_lines(&dict, &["کتاب".to_string()]);
    let missing = dir.path().join("nope.tsv");
    let err = cli(&[
        "build",
        "--dictionary",
        s(&dict),
        "--keyboard",
        s(&missing),
        "--out",
        s(&dir.path().join("idx")),
    ])
    .unwrap_err();
    assert_ne!(err.exit_code(), 0);
    assert!(err.to_string().contains("nope.tsv"), "{err}");
}

#[test]
fn corrupt_repetitions_and_stats() {
    let f = fixture(300, 10, 3);
    let out = f.path("data.tsv");
    let rejects = f.path("rejects.tsv");
    cli(&[
        "corrupt",
        "--index",
        s(&f.index),
        "--corpus",
        s(&f.corpus),
        "--out",
        s(&out),
        "--seed",
        "42",
        "--repetitions",
        "2",
        "--rejects",
        s(&rejects),
    ])
    .unwrap();
    let records = read_records(fs::File::open(&out).map(std::io::BufReader::new).unwrap()).unwrap();
    assert_eq!(records.len(), 2 * 300);
    let stats = fs::read_to_string(f.path("data.tsv.stats.tsv")).unwrap();
    let cells: Vec<&str> = stats.lines().skip(1).take(7).collect();
    assert_eq!(cells[0].split('\t').take(2).collect::<Vec<_>>(), ["none", "none"]);
    for cat in ["real", "nonreal"] {
        for t in ["keyboard", "substitution", "homophone"] {
            assert!(
                cells.iter().any(|c| c.starts_with(&format!("{cat}\t{t}\t"))),
                "{cat}/{t}"
            );
        }
    }
    assert_eq!(fs::read_to_string(&rejects).unwrap(), "");
}

#[test]
fn corrupt_empty_corpus_is_a_data_error() {
    let f = fixture(5, 10, 4);
    let empty = f.path("empty.txt");
    write_lines(&empty, &["x y".to_string()]);
    let err = cli(&[
        "corrupt",
        "--index",
        s(&f.index),
        "--corpus",
        s(&empty),
        "--out",
        s(&f.path("o.tsv")),
    ])
    .unwrap_err();
    assert_eq!(err.exit_code(), 3);
    assert!(err.to_string().contains("survived"), "{err}");
}

#[test]
fn oracle_scorer_recovers_every_error() {
    let f = fixture(400, 10, 5);
    let data = f.path("data.tsv");
    let preds = f.path("pred.tsv");
    let report = f.path("report.json");
    cli(&[
        "corrupt",
        "--index",
        s(&f.index),
        "--corpus",
        s(&f.corpus),
        "--out",
        s(&data),
        "--eval-filter",
    ])
    .unwrap();
    cli(&[
        "correct",
        "--index",
        s(&f.index),
        "--input",
        s(&data),
        "--out",
        s(&preds),
        "--scorer",
        "oracle",
    ])
    .unwrap();
    cli(&[
        "evaluate",
        "--index",
        s(&f.index),
        "--gold",
        s(&data),
        "--predictions",
        s(&preds),
        "--out",
        s(&report),
        "--diagnostics",
        s(&f.path("diag.csv")),
    ])
    .unwrap();
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["overall"]["micro"]["recall"], 1.0);
    assert_eq!(r["overall"]["micro"]["precision"], 1.0);
    assert_eq!(r["overall"]["counts"]["fn"], 0);
    assert!(r["candidates"]["mean"].as_f64().unwrap() > 0.0);
    assert_eq!(
        fs::read_to_string(f.path("diag.csv")).unwrap(),
        "class,metric,bin,count\n"
    );
}

#[test]
fn near_certain_threshold_replaces_no_real_word() {
    let f = fixture(300, 3000, 6);
    let data = f.path("data.tsv");
    let preds = f.path("pred.tsv");
    cli(&[
        "corrupt",
        "--index",
        s(&f.index),
        "--corpus",
        s(&f.corpus),
        "--out",
        s(&data),
        "--p-unchanged",
        "1",
    ])
    .unwrap();
    cli(&[
        "correct",
        "--index",
        s(&f.index),
        "--input",
        s(&data),
        "--out",
        s(&preds),
        "--lm-corpus",
        s(&f.lm_corpus),
        "--ngram-norm",
        "vocabulary",
        "--threshold",
        "0.999",
        "--mode",
        "scan",
    ])
    .unwrap();
    let rows = read_predictions(fs::File::open(&preds).map(std::io::BufReader::new).unwrap()).unwrap();
    assert!(rows.len() > 300 * 5);
    assert!(rows.iter().all(|p| p.suggestion.action == Action::Kept));
}

#[test]
fn baseline_v2_logs_ball_sizes() {
    let f = fixture(60, 2000, 7);
    let data = f.path("data.tsv");
    cli(&[
        "corrupt",
        "--index",
        s(&f.index),
        "--corpus",
        s(&f.corpus),
        "--out",
        s(&data),
        "--eval-filter",
    ])
    .unwrap();
    let mut means = Vec::new();
    for strategy in ["proposed", "baseline_v2"] {
        let preds = f.path(&format!("{strategy}.tsv"));
        cli(&[
            "correct",
            "--index",
            s(&f.index),
            "--input",
            s(&data),
            "--out",
            s(&preds),
            "--lm-corpus",
            s(&f.lm_corpus),
            "--strategy",
            strategy,
        ])
        .unwrap();
        let meta: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(f.path(&format!("{strategy}.tsv.meta.json"))).unwrap()).unwrap();
        let counts = meta["candidate_counts"].as_array().unwrap();
        assert_eq!(counts.len(), fs::read_to_string(&preds).unwrap().lines().count());
        means.push(meta["summary"]["candidates"]["mean"].as_f64().unwrap());
    }
    assert!(means[1] > means[0], "{means:?}");
}

#[test]
fn sweep_has_one_row_per_threshold() {
    let f = fixture(200, 2000, 8);
    let data = f.path("data.tsv");
    let csv = f.path("sweep.csv");
    cli(&[
        "corrupt",
        "--index",
        s(&f.index),
        "--corpus",
        s(&f.corpus),
        "--out",
        s(&data),
    ])
    .unwrap();
    cli(&[
        "sweep",
        "--index",
        s(&f.index),
        "--input",
        s(&data),
        "--out",
        s(&csv),
        "--lm-corpus",
        s(&f.lm_corpus),
    ])
    .unwrap();
    let text = fs::read_to_string(&csv).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 6);
    assert!(rows[1].starts_with("1e-1,"), "{}", rows[1]);
}

#[test]
fn zwnj_ablation_flag_emits_pair() {
    let f = fixture(100, 500, 9);
    let data = f.path("data.tsv");
    let preds = f.path("pred.tsv");
    let report = f.path("report.json");
    cli(&[
        "corrupt",
        "--index",
        s(&f.index),
        "--corpus",
        s(&f.corpus),
        "--out",
        s(&data),
        "--eval-filter",
    ])
    .unwrap();
    cli(&[
        "correct",
        "--index",
        s(&f.index),
        "--input",
        s(&data),
        "--out",
        s(&preds),
        "--lm-corpus",
        s(&f.lm_corpus),
    ])
    .unwrap();
    cli(&[
        "evaluate",
        "--index",
        s(&f.index),
        "--gold",
        s(&data),
        "--predictions",
        s(&preds),
        "--out",
        s(&report),
        "--zwnj-ablation",
    ])
    .unwrap();
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["raw"]["zwnj_mode"], "preserve");
    assert_eq!(r["stripped"]["zwnj_mode"], "strip");
}

#[test]
fn evaluate_rejects_foreign_prediction_ids() {
    let f = fixture(50, 10, 10);
    let data = f.path("data.tsv");
    let preds = f.path("pred.tsv");
    cli(&[
        "corrupt",
        "--index",
        s(&f.index),
        "--corpus",
        s(&f.corpus),
        "--out",
        s(&data),
    ])
    .unwrap();
    cli(&[
        "correct",
        "--index",
        s(&f.index),
        "--input",
        s(&data),
        "--out",
        s(&preds),
        "--scorer",
        "unigram",
    ])
    .unwrap();
    let mut text = fs::read_to_string(&preds).unwrap();
    text.push_str("999999\t0\tا\tا\tkept\t\tok\n");
    fs::write(&preds, text).unwrap();
    let err = cli(&[
        "evaluate",
        "--index",
        s(&f.index),
        "--gold",
        s(&data),
        "--predictions",
        s(&preds),
        "--out",
        s(&f.path("r.json")),
    ])
    .unwrap_err();
    assert_eq!(err.exit_code(), 3);
    assert!(err.to_string().contains("999999"), "{err}");
}

#[test]
fn unreachable_service_is_reported_per_row() {
    let f = fixture(20, 10, 11);
    let data = f.path("data.tsv");
    let preds = f.path("pred.tsv");
    cli(&[
        "corrupt",
        "--index",
        s(&f.index),
        "--corpus",
        s(&f.corpus),
        "--out",
        s(&data),
        "--eval-filter",
    ])
    .unwrap();
    // a port that was just free
    let port = std::net::TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let url = format!("http://127.0.0.1:{port}");
    let base = [
        "correct",
        "--index",
        s(&f.index),
        "--input",
        s(&data),
        "--out",
        s(&preds),
        "--scorer",
        "remote",
        "--service-url",
        &url,
        "--retries",
        "0",
        "--timeout-secs",
        "2",
    ];
    cli(&base).unwrap();
    let rows = read_predictions(fs::File::open(&preds).map(std::io::BufReader::new).unwrap()).unwrap();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|p| p.suggestion.action == Action::Kept));
    assert!(rows.iter().any(|p| p.suggestion.reason.as_str() == "scorer_failure"));

    let mut hard = base.to_vec();
    hard.push("--hard-fail");
    assert_eq!(cli(&hard).unwrap_err().exit_code(), 4);
}

#[test]
fn ngram_without_corpus_is_a_config_error() {
    let f = fixture(20, 10, 12);
    let data = f.path("data.tsv");
    cli(&[
        "corrupt",
        "--index",
        s(&f.index),
        "--corpus",
        s(&f.corpus),
        "--out",
        s(&data),
    ])
    .unwrap();
    let err = cli(&[
        "correct",
        "--index",
        s(&f.index),
        "--input",
        s(&data),
        "--out",
        s(&f.path("p.tsv")),
    ])
    .unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn training_file_lines_align() {
    let f = fixture(80, 10, 13);
    let data = f.path("data.tsv");
    let train = f.path("train.tsv");
    cli(&[
        "corrupt",
        "--index",
        s(&f.index),
        "--corpus",
        s(&f.corpus),
        "--out",
        s(&data),
        "--training-out",
        s(&train),
    ])
    .unwrap();
    let text = fs::read_to_string(&train).unwrap();
    assert_eq!(text.lines().count(), 80);
    for line in text.lines() {
        let cols: Vec<usize> = line.split('\t').map(|c| c.split(' ').count()).collect();
        assert_eq!(cols.len(), 4);
        assert!(cols.iter().all(|&n| n == cols[0]), "{line}");
    }
}

#[test]
fn rethreshold_matches_rerun() {
    use misspell::corrector::{Corrector, CorrectorConfig};
    use misspell::evaluation::{resolve_all, DEFAULT_SWEEP};
    use misspell::scorer::{NgramModel, NgramScorer, Normalization};
    use misspell::textnorm::tokenize;
    use misspell_cli::commands::{correct_records, judged_subset, score_decisions};
    use misspell_cli::Index;

    let f = fixture(200, 3000, 14);
    let data = f.path("data.tsv");
    cli(&[
        "corrupt",
        "--index",
        s(&f.index),
        "--corpus",
        s(&f.corpus),
        "--out",
        s(&data),
    ])
    .unwrap();
    let index = Index::load(&f.index).unwrap();
    let records = read_records(fs::File::open(&data).map(std::io::BufReader::new).unwrap()).unwrap();
    let (gold, sites, _) = judged_subset(records, &index);
    let text = fs::read_to_string(&f.lm_corpus).unwrap();
    let sentences: Vec<Vec<String>> = text.lines().map(|l| tokenize(l).tokens).collect();
    let scorer = NgramScorer::new(NgramModel::train(2, 0.1, sentences.iter().map(Vec::as_slice)))
        .with_normalization(Normalization::Vocabulary);
    let open = Corrector::new(&index.lexicon, &index.confusion, &scorer, CorrectorConfig::default()).unwrap();
    let decisions = score_decisions(&open, &gold, &sites);
    for k in DEFAULT_SWEEP {
        let config = CorrectorConfig {
            threshold_k: k,
            ..Default::default()
        };
        let corrector = Corrector::new(&index.lexicon, &index.confusion, &scorer, config).unwrap();
        let (rerun, _) = correct_records(&corrector, &gold, &index);
        assert_eq!(
            resolve_all(&decisions, k, open.config().max_distance),
            rerun,
            "K = {k:e}"
        );
    }
}
