//! Subcommand implementations. Each reads its inputs from the configured
//! paths and the work directory and writes its outputs there; every output
//! file is written to a temporary name and renamed into place.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use log::info;
use rayon::prelude::*;
use serde::Serialize;

use super::config::RunConfig;
use crate::corpus::{
    build_corpus, parse_pubtator, parse_repository_records, read_labeled_corpus, split, verify_against_documents,
    write_labeled_corpus, write_pubtator, write_repository_records, ConceptType, CorpusSplit, CorpusStats,
    LabeledMention, MentionKey, PubTatorCorpus,
};
use crate::error::{Error, Result};
use crate::eval::{
    evaluate, export_errors, read_predictions, write_predictions, ErrorRecord, EvalSummary, PredictionRecord,
};
use crate::features::{load_embeddings, synthesize_embeddings, EncodedExample, FeaturePipeline, Vocab};
use crate::models::gradsuite::{gradient_suite, GradCheck};
use crate::models::{
    maxent_train, sparse_features, train_cnnlstm, Classifier, CnnLstmModel, ModelKind, SparseExample, TrainHistory,
};
use crate::synthetic;

pub const CORPUS_FILE: &str = "corpus.jsonl";
pub const CORPUS_STATS_TEXT: &str = "corpus_stats.txt";
pub const CORPUS_STATS_JSON: &str = "corpus_stats.json";
pub const TRAIN_FILE: &str = "train.jsonl";
pub const TEST_FILE: &str = "test.jsonl";
pub const SPLIT_FILE: &str = "split.json";
pub const VOCAB_FILE: &str = "vocab.json";
pub const MODEL_FILE: &str = "model.ckpt";
pub const HISTORY_FILE: &str = "train_history.json";
pub const PREDICTIONS_FILE: &str = "predictions.jsonl";
pub const REPORT_TEXT: &str = "report.txt";
pub const REPORT_JSON: &str = "report.json";
pub const ERRORS_FILE: &str = "errors.jsonl";
pub const GRADCHECK_FILE: &str = "gradcheck.json";
pub const CONFIG_FILE: &str = "config.toml";

fn work_path(config: &RunConfig, name: &str) -> PathBuf {
    config.paths.work_dir.join(name)
}

/// Writes through a temporary sibling and renames it over `path`, so a
/// failed command never leaves a half-written output behind.
pub fn write_atomic(path: &Path, write: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let result = (|| {
        let mut w = BufWriter::new(File::create(&tmp)?);
        write(&mut w)?;
        w.flush()?;
        w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        Ok(())
    })();
    match result {
        Ok(()) => Ok(fs::rename(&tmp, path)?),
        Err(e) => {
            let _ = fs::remove_file(&tmp);
            Err(e)
        }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)?;
        Ok(())
    })
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn read_documents(config: &RunConfig) -> Result<PubTatorCorpus> {
    let corpus = parse_pubtator(open(&config.paths.documents)?)?;
    if corpus.skipped_unknown_type > 0 {
        info!("skipped {} annotations of other types", corpus.skipped_unknown_type);
    }
    Ok(corpus)
}

fn read_mentions(config: &RunConfig, name: &str) -> Result<Vec<LabeledMention>> {
    read_labeled_corpus(open(&work_path(config, name))?)
}

/// Writes the generated documents and records to the configured input
/// paths.
pub fn cmd_synthesize(config: &RunConfig) -> Result<usize> {
    let corpus = synthetic::generate(&config.synthetic)?;
    write_atomic(&config.paths.documents, |w| write_pubtator(&corpus.documents, &corpus.spans, w))?;
    write_atomic(&config.paths.records, |w| write_repository_records(&corpus.records, w))?;
    info!(
        "wrote {} documents to {} and {} records to {}",
        corpus.documents.len(),
        config.paths.documents.display(),
        corpus.records.len(),
        config.paths.records.display()
    );
    Ok(corpus.documents.len())
}

/// parse → join → explode → filter, then the labeled corpus and its
/// statistics.
pub fn cmd_build_corpus(config: &RunConfig) -> Result<CorpusStats> {
    let docs = read_documents(config)?;
    let records = parse_repository_records(open(&config.paths.records)?)?;
    let built = build_corpus(&docs.spans, &records);
    verify_against_documents(&docs.documents, &built.mentions)?;
    write_atomic(&work_path(config, CORPUS_FILE), |w| write_labeled_corpus(&built.mentions, w))?;
    let table = built.stats.render_table();
    write_atomic(&work_path(config, CORPUS_STATS_TEXT), |w| Ok(w.write_all(table.as_bytes())?))?;
    write_json(&work_path(config, CORPUS_STATS_JSON), &built.stats)?;
    info!("{} ambiguous labeled mentions", built.mentions.len());
    Ok(built.stats)
}

#[derive(Debug, Serialize)]
struct SplitReport {
    strategy: String,
    test_fraction: f64,
    seed: u64,
    train: usize,
    test: usize,
}

pub fn cmd_split(config: &RunConfig) -> Result<CorpusSplit> {
    let mentions = read_mentions(config, CORPUS_FILE)?;
    let s = split(&mentions, config.split.strategy, config.split.test_fraction, config.split.seed)?;
    write_atomic(&work_path(config, TRAIN_FILE), |w| write_labeled_corpus(&s.train, w))?;
    write_atomic(&work_path(config, TEST_FILE), |w| write_labeled_corpus(&s.test, w))?;
    let report = SplitReport {
        strategy: s.strategy.to_string(),
        test_fraction: config.split.test_fraction,
        seed: s.seed,
        train: s.train.len(),
        test: s.test.len(),
    };
    write_json(&work_path(config, SPLIT_FILE), &report)?;
    info!("{} split: {} train, {} test", s.strategy, s.train.len(), s.test.len());
    Ok(s)
}

/// Training outcome written next to the checkpoint.
#[derive(Debug, Clone, Serialize)]
pub struct TrainSummary {
    pub model: ModelKind,
    pub train_mentions: usize,
    pub word_vocab: usize,
    pub feature_vocab: usize,
    /// Full-batch loss per epoch (MaxEnt).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub maxent_losses: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cnnlstm: Option<TrainHistory>,
}

fn encode_mentions(
    pipeline: &FeaturePipeline,
    mentions: &[LabeledMention],
    vocab: Option<&Vocab>,
) -> Result<(Vocab, Vec<EncodedExample>)> {
    let prepared = pipeline.prepare_all(mentions)?;
    let vocab = match vocab {
        Some(v) => v.clone(),
        None => pipeline.build_vocab(&prepared)?,
    };
    let encoded = pipeline.encode_all(mentions, &prepared, &vocab);
    Ok((vocab, encoded))
}

fn sparse_examples(encoded: &[EncodedExample], vocab: &Vocab) -> Vec<SparseExample> {
    encoded.iter().map(|e| SparseExample { features: sparse_features(e, vocab.words.len()), label: e.label }).collect()
}

pub fn cmd_train(config: &RunConfig) -> Result<TrainSummary> {
    let docs = read_documents(config)?;
    let train = read_mentions(config, TRAIN_FILE)?;
    let pipeline = FeaturePipeline::new(&docs.documents, &docs.spans, config.features);
    let (vocab, encoded) = encode_mentions(&pipeline, &train, None)?;
    info!("vocabulary: {} words, {} features", vocab.words.len(), vocab.features.len());

    let mut summary = TrainSummary {
        model: config.model.kind,
        train_mentions: train.len(),
        word_vocab: vocab.words.len(),
        feature_vocab: vocab.features.len(),
        maxent_losses: None,
        cnnlstm: None,
    };
    let classifier = match config.model.kind {
        ModelKind::Rule => Classifier::Rule(config.model.priority_order),
        ModelKind::MaxEnt => {
            let examples = sparse_examples(&encoded, &vocab);
            let num_features = vocab.words.len() + vocab.features.len();
            let (model, losses) = maxent_train(
                &examples,
                num_features,
                ConceptType::COUNT,
                vocab.words.len(),
                &config.maxent,
                config.train.seed,
            )?;
            summary.maxent_losses = Some(losses);
            Classifier::MaxEnt(model)
        }
        ModelKind::CnnLstm => {
            let dim = config.cnnlstm.word_dim;
            let words = if config.paths.embeddings.as_os_str().is_empty() {
                synthesize_embeddings(&vocab, dim)
            } else {
                let table = load_embeddings(open(&config.paths.embeddings)?, &vocab, dim)?;
                info!("embeddings: {} of {} words found", table.found, vocab.words.len());
                table
            };
            let mut model =
                CnnLstmModel::build(config.cnnlstm.clone(), &words, vocab.features.len(), config.train.seed)?;
            info!("cnn+lstm with {} parameters", model.param_count());
            let history = train_cnnlstm(&mut model, &encoded, &config.train, config.model.restrict_candidates)?;
            summary.cnnlstm = Some(history);
            Classifier::CnnLstm(model)
        }
    };
    write_json(&work_path(config, VOCAB_FILE), &vocab)?;
    let hash = vocab.hash();
    write_atomic(&work_path(config, MODEL_FILE), |w| classifier.save(w, &hash))?;
    write_json(&work_path(config, HISTORY_FILE), &summary)?;
    Ok(summary)
}

fn load_vocab(config: &RunConfig) -> Result<Vocab> {
    Ok(serde_json::from_reader(open(&work_path(config, VOCAB_FILE))?)?)
}

/// The rule baseline runs straight from the config: it needs neither a
/// checkpoint nor a vocabulary, so `None` is returned when there is none.
fn load_classifier(config: &RunConfig) -> Result<(Classifier, Option<Vocab>)> {
    if config.model.kind == ModelKind::Rule {
        return Ok((Classifier::Rule(config.model.priority_order), load_vocab(config).ok()));
    }
    let vocab = load_vocab(config)?;
    let classifier = Classifier::load(open(&work_path(config, MODEL_FILE))?, &vocab.hash())?;
    if classifier.kind() != config.model.kind {
        return Err(Error::Config(format!(
            "checkpoint holds a {} model but model.kind is {}",
            classifier.kind(),
            config.model.kind
        )));
    }
    Ok((classifier, Some(vocab)))
}

pub fn cmd_predict(config: &RunConfig) -> Result<Vec<PredictionRecord>> {
    let (classifier, vocab) = load_classifier(config)?;
    let docs = read_documents(config)?;
    let test = read_mentions(config, TEST_FILE)?;
    let pipeline = FeaturePipeline::new(&docs.documents, &docs.spans, config.features);
    // Without a vocabulary (rule only) the test mentions supply their own;
    // the rule reads nothing but the candidate types.
    let (_, encoded) = encode_mentions(&pipeline, &test, vocab.as_ref())?;
    let records = test
        .par_iter()
        .zip(&encoded)
        .map(|(m, ex)| {
            let p = classifier.predict(ex, config.model.restrict_candidates)?;
            Ok(PredictionRecord {
                pmid: m.pmid,
                start: m.start,
                end: m.end,
                surface: m.surface.clone(),
                gold_type: m.gold_type,
                predicted_type: p.predicted,
                probs: p.probs,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    write_atomic(&work_path(config, PREDICTIONS_FILE), |w| write_predictions(&records, w))?;
    info!("{} predictions with the {} model", records.len(), classifier.kind());
    Ok(records)
}

/// Scores the predictions file against the gold test corpus and exports
/// the misclassified mentions with their context windows.
pub fn cmd_evaluate(config: &RunConfig) -> Result<EvalSummary> {
    let gold = read_mentions(config, TEST_FILE)?;
    let preds = read_predictions(open(&work_path(config, PREDICTIONS_FILE))?)?;
    let mut by_key: HashMap<MentionKey, &PredictionRecord> = HashMap::new();
    for p in &preds {
        if by_key.insert((p.pmid, p.start, p.end, p.gold_type), p).is_some() {
            return Err(Error::InvalidInput(format!(
                "duplicate prediction for pmid {} {}..{}",
                p.pmid, p.start, p.end
            )));
        }
    }
    if preds.len() != gold.len() {
        return Err(Error::InvalidInput(format!("{} predictions for {} gold mentions", preds.len(), gold.len())));
    }
    let mut pairs = Vec::with_capacity(gold.len());
    for m in &gold {
        let p = by_key
            .get(&m.key())
            .ok_or_else(|| Error::InvalidInput(format!("no prediction for pmid {} {}..{}", m.pmid, m.start, m.end)))?;
        pairs.push((m, *p));
    }
    let gold_types: Vec<ConceptType> = pairs.iter().map(|(m, _)| m.gold_type).collect();
    let predicted: Vec<ConceptType> = pairs.iter().map(|(_, p)| p.predicted_type).collect();
    let restricted = config.model.restrict_candidates || config.model.kind == ModelKind::Rule;
    let summary = evaluate(&gold_types, &predicted, restricted)?;

    let wrong: Vec<&(&LabeledMention, &PredictionRecord)> =
        pairs.iter().filter(|(m, p)| m.gold_type != p.predicted_type).collect();
    let errors = if wrong.is_empty() {
        Vec::new()
    } else {
        let docs = read_documents(config)?;
        let pipeline = FeaturePipeline::new(&docs.documents, &docs.spans, config.features);
        wrong
            .iter()
            .map(|(m, p)| {
                let w = pipeline.prepare(m)?.windows;
                Ok(ErrorRecord {
                    pmid: m.pmid,
                    start: m.start,
                    end: m.end,
                    surface: m.surface.clone(),
                    gold_type: m.gold_type,
                    predicted_type: p.predicted_type,
                    candidate_types: m.candidate_types,
                    probs: p.probs.clone(),
                    before: w.before,
                    after: w.after,
                })
            })
            .collect::<Result<Vec<_>>>()?
    };
    let mut written = 0;
    write_atomic(&work_path(config, ERRORS_FILE), |w| {
        written = export_errors(&errors, w)?;
        Ok(())
    })?;
    let expected = summary.matrix.total() - summary.matrix.trace();
    if written as u64 != expected {
        return Err(Error::InvalidInput(format!("exported {written} errors, confusion matrix has {expected}")));
    }
    let table = summary.render_table();
    write_atomic(&work_path(config, REPORT_TEXT), |w| Ok(w.write_all(table.as_bytes())?))?;
    let json = summary.to_json()?;
    write_atomic(&work_path(config, REPORT_JSON), |w| {
        w.write_all(json.as_bytes())?;
        writeln!(w)?;
        Ok(())
    })?;
    info!("micro F1 {:.4}, macro F1 {:.4}, {written} errors exported", summary.micro.f1, summary.macro_avg.f1);
    Ok(summary)
}

/// Runs the gradient suite seeded with `train.seed`; fails when any check
/// is above tolerance.
pub fn cmd_gradcheck(config: &RunConfig) -> Result<Vec<GradCheck>> {
    let checks = gradient_suite(config.train.seed)?;
    write_json(&work_path(config, GRADCHECK_FILE), &checks)?;
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed()).map(|c| c.name.as_str()).collect();
    if !failed.is_empty() {
        return Err(Error::InvalidInput(format!("gradient check failed for {}", failed.join(", "))));
    }
    Ok(checks)
}

/// Runs [`cmd_gradcheck`] and renders one line per check; the table is
/// produced even when a check fails.
pub fn gradient_table(config: &RunConfig) -> (String, Result<()>) {
    let checks = match gradient_suite(config.train.seed) {
        Ok(c) => c,
        Err(e) => return (String::new(), Err(e)),
    };
    let mut out = format!("{:<30} {:>8} {:>14}  {}\n", "check", "entries", "max rel err", "result");
    for c in &checks {
        out.push_str(&format!(
            "{:<30} {:>8} {:>14.3e}  {}\n",
            c.name,
            c.checked,
            c.max_rel_error,
            if c.passed() { "pass" } else { "FAIL" }
        ));
    }
    let result = write_json(&work_path(config, GRADCHECK_FILE), &checks).and_then(|()| {
        let failed: Vec<&str> = checks.iter().filter(|c| !c.passed()).map(|c| c.name.as_str()).collect();
        if failed.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("gradient check failed for {}", failed.join(", "))))
        }
    });
    (out, result)
}

/// Saves the resolved configuration in the work directory.
pub fn save_config(config: &RunConfig) -> Result<()> {
    let text = config.to_toml()?;
    write_atomic(&work_path(config, CONFIG_FILE), |w| Ok(w.write_all(text.as_bytes())?))
}
