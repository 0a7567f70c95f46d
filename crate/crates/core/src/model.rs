//! The trained multiclass model and the training pipeline behind it.

use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibrate::{self, CalibrateError, CalibratedPair, ClassDistribution};
use crate::learner::{self, BinaryLinearClassifier, LearnError, TrainConfig};
use crate::textprep::{self, TextPrepError, TokenSequence, Vocabulary};
use crate::vectorize::{self, IdfTable, SparseVector, VectorizeError};
use crate::ClassCode;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("{documents} documents but {labels} labels")]
    LengthMismatch { documents: usize, labels: usize },
    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),
    #[error("vocabulary: {0}")]
    TextPrep(#[from] TextPrepError),
    #[error("vectorize: {0}")]
    Vectorize(#[from] VectorizeError),
    #[error("learner: {0}")]
    Learn(#[from] LearnError),
    #[error("calibration of pair {positive}/{negative}: {source}")]
    Calibrate {
        positive: ClassCode,
        negative: ClassCode,
        #[source]
        source: CalibrateError,
    },
}

/// Training hyperparameters, as read from a configuration file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub c: f64,
    pub max_epochs: usize,
    pub dual_gap_tol: f64,
    pub seed: u64,
    /// Classes with fewer training documents are left out of the model.
    pub min_class_count: usize,
    /// Cross-validation folds used to produce sigmoid-fitting scores.
    pub folds: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let train = TrainConfig::default();
        ModelConfig {
            c: train.c,
            max_epochs: train.max_epochs,
            dual_gap_tol: train.dual_gap_tol,
            seed: train.seed,
            min_class_count: 10,
            folds: 5,
        }
    }
}

impl ModelConfig {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            c: self.c,
            max_epochs: self.max_epochs,
            dual_gap_tol: self.dual_gap_tol,
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        self.train_config()
            .validate()
            .map_err(|e| ModelError::InvalidConfig(e.to_string()))?;
        if self.folds < 2 {
            return Err(ModelError::InvalidConfig(format!(
                "folds must be at least 2, got {}",
                self.folds
            )));
        }
        if self.min_class_count < self.folds {
            return Err(ModelError::InvalidConfig(format!(
                "min_class_count ({}) must be at least the number of folds ({})",
                self.min_class_count, self.folds
            )));
        }
        Ok(())
    }
}

/// Provenance stored alongside the model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelMetadata {
    /// Seconds since the Unix epoch; `SOURCE_DATE_EPOCH` overrides the clock.
    pub created_unix: i64,
    pub config: ModelConfig,
    /// Size of the labeled corpus the training split was drawn from.
    pub corpus_size: u64,
}

impl ModelMetadata {
    pub fn new(config: ModelConfig, corpus_size: u64) -> Self {
        ModelMetadata {
            created_unix: creation_time(),
            config,
            corpus_size,
        }
    }
}

fn creation_time() -> i64 {
    if let Some(epoch) = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.trim().parse().ok())
    {
        return epoch;
    }
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs() as i64)
        .unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub documents: usize,
    pub dropped_classes: Vec<(ClassCode, usize)>,
    pub vocabulary_size: usize,
    pub pairs: usize,
    /// Pair trainings (fold models included) that hit `max_epochs`.
    pub unconverged: usize,
}

/// Vocabulary, IDF weights and one calibrated classifier per class pair.
#[derive(Debug, Clone, PartialEq)]
pub struct MulticlassModel {
    pub metadata: ModelMetadata,
    vocabulary: Vocabulary,
    idf: IdfTable,
    classes: Vec<ClassCode>,
    pairs: Vec<CalibratedPair>,
}

impl MulticlassModel {
    /// Assembles a model from parts, checking that they fit together.
    pub fn from_parts(
        metadata: ModelMetadata,
        vocabulary: Vocabulary,
        idf: IdfTable,
        classes: Vec<ClassCode>,
        pairs: Vec<CalibratedPair>,
    ) -> Result<Self, String> {
        if idf.len() != vocabulary.len() {
            return Err(format!("idf has {} entries for {} words", idf.len(), vocabulary.len()));
        }
        if classes.len() < 2 {
            return Err(format!("need at least two classes, got {}", classes.len()));
        }
        if let Some(w) = classes.windows(2).find(|w| w[0] >= w[1]) {
            return Err(format!("classes not strictly ascending at {}", w[1]));
        }
        let expected = learner::class_pairs(classes.len());
        if pairs.len() != expected.len() {
            return Err(format!(
                "expected {} pair classifiers, got {}",
                expected.len(),
                pairs.len()
            ));
        }
        for (pair, (i, j)) in pairs.iter().zip(expected) {
            let c = &pair.classifier;
            if (c.positive_class, c.negative_class) != (classes[i], classes[j]) {
                return Err(format!(
                    "pair {}/{} out of canonical order (expected {}/{})",
                    c.positive_class, c.negative_class, classes[i], classes[j]
                ));
            }
            if c.weights.len() != vocabulary.len() {
                return Err(format!(
                    "pair {}/{} has {} weights for {} words",
                    c.positive_class,
                    c.negative_class,
                    c.weights.len(),
                    vocabulary.len()
                ));
            }
            let finite = c.bias.is_finite()
                && pair.sigmoid.a.is_finite()
                && pair.sigmoid.b.is_finite()
                && c.weights.iter().all(|w| w.is_finite());
            if !finite {
                return Err(format!(
                    "pair {}/{} has non-finite parameters",
                    c.positive_class, c.negative_class
                ));
            }
        }
        Ok(MulticlassModel {
            metadata,
            vocabulary,
            idf,
            classes,
            pairs,
        })
    }

    /// Runs the full training pipeline on normalized training documents.
    ///
    /// Classes below `min_class_count` are dropped first; the vocabulary and
    /// IDF table come from the remaining documents only. Each pair then gets
    /// out-of-fold scores, a sigmoid fit on them and a final classifier trained
    /// on all of the pair's documents.
    pub fn train(
        docs: &[TokenSequence],
        labels: &[ClassCode],
        config: &ModelConfig,
        corpus_size: u64,
    ) -> Result<(MulticlassModel, TrainReport), ModelError> {
        config.validate()?;
        if docs.len() != labels.len() {
            return Err(ModelError::LengthMismatch {
                documents: docs.len(),
                labels: labels.len(),
            });
        }
        let (classes, dropped_classes) = learner::surviving_classes(labels, config.min_class_count);
        if classes.len() < 2 {
            return Err(LearnError::TooFewClasses {
                found: classes.len(),
                min: config.min_class_count,
            }
            .into());
        }
        let (kept_docs, kept_labels): (Vec<&TokenSequence>, Vec<ClassCode>) = docs
            .iter()
            .zip(labels)
            .filter(|(_, l)| classes.binary_search(l).is_ok())
            .map(|(d, &l)| (d, l))
            .unzip();
        let owned: Vec<TokenSequence> = kept_docs.into_iter().cloned().collect();
        let vocabulary = textprep::build_vocabulary(&owned)?;
        let idf = vectorize::build_idf(&vocabulary, owned.len() as u64)?;
        let vectors: Vec<SparseVector> = owned
            .par_iter()
            .map(|d| vectorize::vectorize(d, &vocabulary, &idf))
            .collect();

        let dim = vocabulary.len();
        let base = config.train_config();
        let trained = learner::class_pairs(classes.len())
            .into_par_iter()
            .enumerate()
            .map(|(p, (i, j))| {
                let (positive, negative) = (classes[i], classes[j]);
                let problem = learner::pair_problem(&vectors, &kept_labels, positive, negative);
                let cfg = base.with_seed(learner::derive_seed(base.seed, p as u64));
                let wrap = |source| ModelError::Calibrate {
                    positive,
                    negative,
                    source,
                };
                let cv = calibrate::crossval_scores(&problem.x, &problem.y, dim, &cfg, config.folds).map_err(wrap)?;
                let sigmoid = calibrate::fit_sigmoid(&cv.scores).map_err(wrap)?.params;
                let fit = learner::train_binary(&problem.x, &problem.y, dim, &cfg)?;
                let pair = CalibratedPair {
                    classifier: BinaryLinearClassifier {
                        positive_class: positive,
                        negative_class: negative,
                        weights: fit.weights,
                        bias: fit.bias,
                    },
                    sigmoid,
                };
                Ok((pair, usize::from(!fit.converged)))
            })
            .collect::<Result<Vec<_>, ModelError>>()?;
        let unconverged = trained.iter().map(|t| t.1).sum();
        let pairs: Vec<CalibratedPair> = trained.into_iter().map(|t| t.0).collect();

        let report = TrainReport {
            documents: owned.len(),
            dropped_classes,
            vocabulary_size: vocabulary.len(),
            pairs: pairs.len(),
            unconverged,
        };
        let model = MulticlassModel {
            metadata: ModelMetadata::new(*config, corpus_size),
            vocabulary,
            idf,
            classes,
            pairs,
        };
        Ok((model, report))
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn idf(&self) -> &IdfTable {
        &self.idf
    }

    /// Model classes in ascending order.
    pub fn classes(&self) -> &[ClassCode] {
        &self.classes
    }

    pub fn pairs(&self) -> &[CalibratedPair] {
        &self.pairs
    }

    pub fn vectorize_tokens(&self, tokens: &TokenSequence) -> SparseVector {
        vectorize::vectorize(tokens, &self.vocabulary, &self.idf)
    }

    pub fn vectorize_text(&self, text: &str) -> SparseVector {
        self.vectorize_tokens(&textprep::normalize(text))
    }

    pub fn decision_values(&self, x: &SparseVector) -> Vec<f64> {
        self.pairs.iter().map(|p| p.classifier.decision_value(x)).collect()
    }

    pub fn predict_distribution(&self, x: &SparseVector) -> ClassDistribution {
        calibrate::predict_distribution(&self.classes, &self.pairs, x)
    }

    pub fn predict_text(&self, text: &str) -> ClassDistribution {
        self.predict_distribution(&self.vectorize_text(text))
    }

    /// Classes ranked by descending probability, ties by ascending code.
    pub fn rank(&self, x: &SparseVector) -> Vec<ClassCode> {
        self.predict_distribution(x)
            .ranked()
            .into_iter()
            .map(|(c, _)| c)
            .collect()
    }
}
