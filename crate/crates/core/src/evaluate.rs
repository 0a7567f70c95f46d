//! Train/validation/test splitting and accuracy statistics.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ClassCode;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvaluateError {
    #[error("corpus of {0} documents is too small to split (need at least 10)")]
    CorpusTooSmall(usize),
    #[error("no predictions to evaluate")]
    Empty,
    #[error("{predictions} predictions but {truths} truths")]
    LengthMismatch { predictions: usize, truths: usize },
    #[error("k must be at least 1")]
    ZeroK,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Validation,
    Test,
}

/// Disjoint index sets covering `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSplit {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
}

impl DatasetSplit {
    pub fn part(&self, name: SplitName) -> &[usize] {
        match name {
            SplitName::Train => &self.train,
            SplitName::Validation => &self.validation,
            SplitName::Test => &self.test,
        }
    }
}

/// Seeded shuffle of `0..n`, then 70% train, 15% validation (each rounded
/// half-up) and the remainder as test.
pub fn split(n: usize, seed: u64) -> Result<DatasetSplit, EvaluateError> {
    if n < 10 {
        return Err(EvaluateError::CorpusTooSmall(n));
    }
    let n_train = (7 * n + 5) / 10;
    let n_validation = (15 * n + 50) / 100;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = order.split_off(n_train + n_validation);
    let validation = order.split_off(n_train);
    Ok(DatasetSplit {
        train: order,
        validation,
        test,
        seed,
    })
}

/// Fraction of samples whose true class is among the first `k` ranked classes.
pub fn top_k_accuracy<P: AsRef<[ClassCode]>>(
    predictions: &[P],
    truths: &[ClassCode],
    k: usize,
) -> Result<f64, EvaluateError> {
    check_lengths(predictions.len(), truths.len())?;
    if k == 0 {
        return Err(EvaluateError::ZeroK);
    }
    let hits = predictions
        .iter()
        .zip(truths)
        .filter(|(ranked, truth)| ranked.as_ref().iter().take(k).any(|c| c == *truth))
        .count();
    Ok(hits as f64 / truths.len() as f64)
}

fn check_lengths(predictions: usize, truths: usize) -> Result<(), EvaluateError> {
    if predictions != truths {
        return Err(EvaluateError::LengthMismatch { predictions, truths });
    }
    if truths == 0 {
        return Err(EvaluateError::Empty);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    /// Occurrences of the class among the true labels.
    pub frequency: u64,
    pub misclassified: u64,
    /// `misclassified / frequency`.
    pub misclassification_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MisclassificationReport {
    pub per_class: BTreeMap<ClassCode, ClassStats>,
    /// Pearson r between class frequency and misclassification rate; `None`
    /// when fewer than three classes occur or either variable is constant.
    pub frequency_misclassification_correlation: Option<f64>,
}

impl MisclassificationReport {
    pub fn total_errors(&self) -> u64 {
        self.per_class.values().map(|s| s.misclassified).sum()
    }
}

pub fn misclassification_report(
    rank1: &[ClassCode],
    truths: &[ClassCode],
) -> Result<MisclassificationReport, EvaluateError> {
    check_lengths(rank1.len(), truths.len())?;
    let mut tallies: BTreeMap<ClassCode, (u64, u64)> = BTreeMap::new();
    for (pred, truth) in rank1.iter().zip(truths) {
        let entry = tallies.entry(*truth).or_default();
        entry.0 += 1;
        if pred != truth {
            entry.1 += 1;
        }
    }
    let per_class: BTreeMap<ClassCode, ClassStats> = tallies
        .into_iter()
        .map(|(class, (frequency, misclassified))| {
            let stats = ClassStats {
                frequency,
                misclassified,
                misclassification_rate: misclassified as f64 / frequency as f64,
            };
            (class, stats)
        })
        .collect();
    let freqs: Vec<f64> = per_class.values().map(|s| s.frequency as f64).collect();
    let rates: Vec<f64> = per_class.values().map(|s| s.misclassification_rate).collect();
    let frequency_misclassification_correlation = if per_class.len() >= 3 {
        pearson(&freqs, &rates)
    } else {
        None
    };
    Ok(MisclassificationReport {
        per_class,
        frequency_misclassification_correlation,
    })
}

/// Pearson correlation; `None` if either input has zero variance.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub split: SplitName,
    pub samples: usize,
    pub top_k_accuracy: BTreeMap<usize, f64>,
    pub per_class: BTreeMap<ClassCode, ClassStats>,
    pub frequency_misclassification_correlation: Option<f64>,
}

/// Builds the full report from ranked class lists. `max_k` top-k values are
/// reported, `1..=max_k`.
pub fn evaluation_report<P: AsRef<[ClassCode]>>(
    split: SplitName,
    ranked: &[P],
    truths: &[ClassCode],
    max_k: usize,
) -> Result<EvaluationReport, EvaluateError> {
    let top_k_accuracy = (1..=max_k)
        .map(|k| top_k_accuracy(ranked, truths, k).map(|acc| (k, acc)))
        .collect::<Result<BTreeMap<_, _>, _>>()?;
    if top_k_accuracy.is_empty() {
        return Err(EvaluateError::ZeroK);
    }
    let rank1: Vec<ClassCode> = ranked
        .iter()
        .map(|r| r.as_ref().first().copied().ok_or(EvaluateError::Empty))
        .collect::<Result<_, _>>()?;
    let misc = misclassification_report(&rank1, truths)?;
    Ok(EvaluationReport {
        split,
        samples: truths.len(),
        top_k_accuracy,
        per_class: misc.per_class,
        frequency_misclassification_correlation: misc.frequency_misclassification_correlation,
    })
}

impl EvaluationReport {
    /// Plain-text rendering for terminals.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "split: {:?}  samples: {}", self.split, self.samples);
        for (k, acc) in &self.top_k_accuracy {
            let _ = writeln!(out, "top-{k} accuracy: {:.4}", acc);
        }
        match self.frequency_misclassification_correlation {
            Some(r) => {
                let _ = writeln!(out, "frequency/misclassification correlation: {r:.4}");
            }
            None => {
                let _ = writeln!(out, "frequency/misclassification correlation: undefined");
            }
        }
        let _ = writeln!(out, "{:<6} {:>9} {:>9} {:>7}", "class", "frequency", "errors", "rate");
        for (class, s) in &self.per_class {
            let _ = writeln!(
                out,
                "{:<6} {:>9} {:>9} {:>7.4}",
                class, s.frequency, s.misclassified, s.misclassification_rate
            );
        }
        out
    }
}
