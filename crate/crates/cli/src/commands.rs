//! The `train`, `evaluate` and `predict` subcommands.

use std::path::{Path, PathBuf};

use catmat_core::evaluate::{self, EvaluationReport, SplitName};
use catmat_core::ingest::{self, IngestError, IngestStats, LabeledDocument, RecordFormat};
use catmat_core::model::TrainReport;
use catmat_core::persist;
use catmat_core::suggest::{self, ClassLabels};
use catmat_core::textprep::{self, TokenSequence};
use catmat_core::{ClassCode, MulticlassModel, SuggestionResponse};
use rayon::prelude::*;
use serde::Serialize;

use crate::{CliError, TrainSettings};

/// Labeled documents read from one data file.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub docs: Vec<LabeledDocument>,
    pub stats: IngestStats,
}

impl Corpus {
    pub fn load(path: &Path) -> Result<Corpus, CliError> {
        let format = RecordFormat::from_path(path).ok_or_else(|| IngestError::UnknownFormat(path.to_path_buf()))?;
        let (docs, errors, stats) = ingest::collect_labeled(ingest::read_records(path, format)?);
        for e in errors.iter().take(20) {
            log::warn!("{}: skipped malformed record, {e}", path.display());
        }
        if errors.len() > 20 {
            log::warn!("{}: {} more malformed records", path.display(), errors.len() - 20);
        }
        if docs.is_empty() {
            return Err(CliError::NoDocuments {
                path: path.to_path_buf(),
            });
        }
        Ok(Corpus { docs, stats })
    }

    pub fn tokens(&self) -> Vec<TokenSequence> {
        self.docs.par_iter().map(|d| textprep::normalize(&d.text)).collect()
    }

    pub fn labels(&self) -> Vec<ClassCode> {
        self.docs.iter().map(|d| d.class_code).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub c: f64,
    pub validation_top1: f64,
    pub validation_top3: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub stats: IngestStats,
    pub split_sizes: [usize; 3],
    pub sweep: Vec<SweepPoint>,
    pub chosen: SweepPoint,
    pub report: TrainReport,
    pub classes: usize,
    pub bytes: u64,
    pub model_version: String,
}

fn ranked_predictions(model: &MulticlassModel, tokens: &[TokenSequence], indices: &[usize]) -> Vec<Vec<ClassCode>> {
    indices
        .par_iter()
        .map(|&i| model.rank(&model.vectorize_tokens(&tokens[i])))
        .collect()
}

/// Trains one model per candidate C on the training split, keeps the one
/// with the best validation top-1 accuracy (top-3, then grid order break
/// ties) and saves it to `out`.
pub fn train(data: &Path, settings: &TrainSettings, out: &Path) -> Result<TrainOutcome, CliError> {
    settings.validate()?;
    let corpus = Corpus::load(data)?;
    let n = corpus.docs.len();
    let split = evaluate::split(n, settings.model.seed).map_err(CliError::Split)?;
    let tokens = corpus.tokens();
    let labels = corpus.labels();
    let train_docs: Vec<TokenSequence> = split.train.iter().map(|&i| tokens[i].clone()).collect();
    let train_labels: Vec<ClassCode> = split.train.iter().map(|&i| labels[i]).collect();
    let validation_truths: Vec<ClassCode> = split.validation.iter().map(|&i| labels[i]).collect();

    let mut sweep = Vec::new();
    let mut best: Option<(SweepPoint, MulticlassModel, TrainReport)> = None;
    for config in settings.candidates() {
        log::info!("training with C = {}", config.c);
        let (model, report) = MulticlassModel::train(&train_docs, &train_labels, &config, n as u64)?;
        if report.unconverged > 0 {
            log::warn!(
                "{} pair trainings stopped at max_epochs before reaching the duality gap",
                report.unconverged
            );
        }
        let ranked = ranked_predictions(&model, &tokens, &split.validation);
        let top = |k| evaluate::top_k_accuracy(&ranked, &validation_truths, k).map_err(CliError::Evaluate);
        let point = SweepPoint {
            c: config.c,
            validation_top1: top(1)?,
            validation_top3: top(3)?,
        };
        sweep.push(point);
        let better = best.as_ref().is_none_or(|(b, _, _)| {
            (point.validation_top1, point.validation_top3) > (b.validation_top1, b.validation_top3)
        });
        if better {
            best = Some((point, model, report));
        }
    }
    let (chosen, model, report) = best.expect("at least one candidate configuration");
    let bytes = persist::save(&model, out)?;
    let model_version = persist::fingerprint(&persist::to_bytes(&model));
    Ok(TrainOutcome {
        stats: corpus.stats,
        split_sizes: [split.train.len(), split.validation.len(), split.test.len()],
        sweep,
        chosen,
        report,
        classes: model.classes().len(),
        bytes,
        model_version,
    })
}

/// File recording that the test split of `model` has been evaluated.
pub fn test_marker(model: &Path) -> PathBuf {
    let mut name = model.as_os_str().to_owned();
    name.push(".test-evaluated");
    PathBuf::from(name)
}

#[derive(Debug, Clone)]
pub struct EvaluateOptions {
    pub model: PathBuf,
    pub data: PathBuf,
    pub split: SplitName,
    pub max_k: usize,
    pub force: bool,
}

/// Re-creates the training-time split from the stored seed and evaluates the
/// requested part. Evaluating the test split twice for the same model file
/// is refused unless `force` is set.
pub fn evaluate(opts: &EvaluateOptions) -> Result<EvaluationReport, CliError> {
    let loaded = persist::load(&opts.model)?;
    let marker = test_marker(&opts.model);
    if opts.split == SplitName::Test && !opts.force {
        if let Ok(previous) = std::fs::read_to_string(&marker) {
            if previous.trim() == loaded.fingerprint {
                return Err(CliError::TestSplitUsed { marker });
            }
        }
    }
    let model = loaded.model;
    let corpus = Corpus::load(&opts.data)?;
    if corpus.docs.len() as u64 != model.metadata.corpus_size {
        return Err(CliError::CorpusMismatch {
            expected: model.metadata.corpus_size,
            found: corpus.docs.len(),
        });
    }
    let split = evaluate::split(corpus.docs.len(), model.metadata.config.seed).map_err(CliError::Split)?;
    let indices = split.part(opts.split);
    let tokens = corpus.tokens();
    let ranked = ranked_predictions(&model, &tokens, indices);
    let truths: Vec<ClassCode> = indices.iter().map(|&i| corpus.docs[i].class_code).collect();
    let report = evaluate::evaluation_report(opts.split, &ranked, &truths, opts.max_k).map_err(CliError::Evaluate)?;
    if opts.split == SplitName::Test {
        std::fs::write(&marker, format!("{}\n", loaded.fingerprint)).map_err(|source| CliError::Io {
            context: format!("evaluate: cannot write {}", marker.display()),
            source,
        })?;
    }
    Ok(report)
}

pub fn load_labels(path: Option<&Path>) -> Result<ClassLabels, CliError> {
    Ok(match path {
        Some(p) => ClassLabels::load(p)?,
        None => ClassLabels::default(),
    })
}

pub fn predict(
    model: &Path,
    labels: Option<&Path>,
    description: &str,
    k: Option<usize>,
) -> Result<SuggestionResponse, CliError> {
    let loaded = persist::load(model)?;
    let labels = load_labels(labels)?;
    Ok(suggest::suggest(
        &loaded.model,
        &labels,
        &loaded.fingerprint,
        description,
        k,
    )?)
}
