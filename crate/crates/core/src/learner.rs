//! Linear SVM training by dual coordinate descent, composed one-vs-one.
//!
//! Each binary problem is the L2-regularized, L1-hinge-loss SVM with the bias
//! folded in as an extra constant feature:
//!
//! ```text
//! min_w,b  ½(‖w‖² + b²) + C Σ max(0, 1 − yᵢ(w·xᵢ + b))
//! ```
//!
//! solved in the dual `min_α ½αᵀQα − Σα, 0 ≤ α ≤ C` with
//! `Qᵢⱼ = yᵢyⱼ(xᵢ·xⱼ + 1)`, one coordinate at a time.

use std::borrow::Borrow;
use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::vectorize::SparseVector;
use crate::ClassCode;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LearnError {
    #[error("degenerate binary problem: labels must include both +1 and -1")]
    DegenerateBinaryProblem,
    #[error("label {0} at position {1} is not +1 or -1")]
    InvalidLabel(f64, usize),
    #[error("{samples} samples but {labels} labels")]
    LengthMismatch { samples: usize, labels: usize },
    #[error("feature index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: u32, dim: usize },
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("need at least two classes with {min} or more samples, found {found}")]
    TooFewClasses { found: usize, min: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Hinge-loss weight against the regularizer.
    pub c: f64,
    pub max_epochs: usize,
    /// Stop once (primal − dual) / primal falls to this value.
    pub dual_gap_tol: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            c: 1.0,
            max_epochs: 1000,
            dual_gap_tol: 1e-4,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), LearnError> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(LearnError::InvalidConfig(format!("C must be positive, got {}", self.c)));
        }
        if !(self.dual_gap_tol > 0.0 && self.dual_gap_tol.is_finite()) {
            return Err(LearnError::InvalidConfig(format!(
                "dual_gap_tol must be positive, got {}",
                self.dual_gap_tol
            )));
        }
        if self.max_epochs == 0 {
            return Err(LearnError::InvalidConfig("max_epochs must be at least 1".into()));
        }
        Ok(())
    }

    pub fn with_seed(self, seed: u64) -> Self {
        TrainConfig { seed, ..self }
    }
}

/// Primal and dual objectives observed at one convergence check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapCheck {
    pub epoch: usize,
    /// Lowest primal objective seen so far.
    pub primal: f64,
    pub dual: f64,
}

impl GapCheck {
    pub fn relative_gap(&self) -> f64 {
        (self.primal - self.dual) / self.primal
    }
}

/// Result of one binary training run.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryFit {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Final dual variables, each in `[0, C]`.
    pub alpha: Vec<f64>,
    pub checks: Vec<GapCheck>,
    pub converged: bool,
}

impl BinaryFit {
    pub fn epochs(&self) -> usize {
        self.checks.last().map_or(0, |c| c.epoch)
    }

    pub fn primal_objective(&self) -> f64 {
        self.checks.last().map_or(f64::NAN, |c| c.primal)
    }

    pub fn decision_value(&self, x: &SparseVector) -> f64 {
        x.dot_dense(&self.weights) + self.bias
    }
}

fn check_labels(y: &[f64]) -> Result<(), LearnError> {
    let mut pos = false;
    let mut neg = false;
    for (i, &label) in y.iter().enumerate() {
        if label == 1.0 {
            pos = true;
        } else if label == -1.0 {
            neg = true;
        } else {
            return Err(LearnError::InvalidLabel(label, i));
        }
    }
    if pos && neg {
        Ok(())
    } else {
        Err(LearnError::DegenerateBinaryProblem)
    }
}

fn primal_objective<V: Borrow<SparseVector>>(x: &[V], y: &[f64], weights: &[f64], bias: f64, c: f64) -> (f64, f64) {
    let reg = 0.5 * (weights.iter().map(|w| w * w).sum::<f64>() + bias * bias);
    let loss: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, &yi)| (1.0 - yi * (xi.borrow().dot_dense(weights) + bias)).max(0.0))
        .sum();
    (reg + c * loss, reg)
}

/// Trains one binary classifier on `±1` labels over features `0..dim`.
pub fn train_binary<V: Borrow<SparseVector>>(
    x: &[V],
    y: &[f64],
    dim: usize,
    cfg: &TrainConfig,
) -> Result<BinaryFit, LearnError> {
    cfg.validate()?;
    if x.len() != y.len() {
        return Err(LearnError::LengthMismatch {
            samples: x.len(),
            labels: y.len(),
        });
    }
    check_labels(y)?;
    for xi in x {
        if let Some(index) = xi.borrow().max_index().filter(|&i| i as usize >= dim) {
            return Err(LearnError::IndexOutOfRange { index, dim });
        }
    }

    let c = cfg.c;
    let n = x.len();
    let q_diag: Vec<f64> = x.iter().map(|xi| xi.borrow().dot(xi.borrow()) + 1.0).collect();
    let mut alpha = vec![0.0; n];
    let mut weights = vec![0.0; dim];
    let mut bias = 0.0;
    let mut best = (f64::INFINITY, weights.clone(), bias);
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut checks = Vec::new();
    let mut converged = false;

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let xi = x[i].borrow();
            let yi = y[i];
            let grad = yi * (xi.dot_dense(&weights) + bias) - 1.0;
            let projected = if alpha[i] == 0.0 {
                grad.min(0.0)
            } else if alpha[i] == c {
                grad.max(0.0)
            } else {
                grad
            };
            if projected == 0.0 {
                continue;
            }
            let old = alpha[i];
            alpha[i] = (old - grad / q_diag[i]).clamp(0.0, c);
            let step = (alpha[i] - old) * yi;
            if step != 0.0 {
                for &(j, v) in xi.entries() {
                    weights[j as usize] += step * v;
                }
                bias += step;
            }
        }

        let (primal, reg) = primal_objective(x, y, &weights, bias, c);
        if primal < best.0 {
            best = (primal, weights.clone(), bias);
        }
        let dual = alpha.iter().sum::<f64>() - reg;
        let check = GapCheck {
            epoch,
            primal: best.0,
            dual,
        };
        checks.push(check);
        if check.relative_gap() <= cfg.dual_gap_tol {
            converged = true;
            break;
        }
    }
    if !converged {
        log::debug!(
            "dual coordinate descent stopped at max_epochs={} with relative gap {:.3e}",
            cfg.max_epochs,
            checks.last().map_or(f64::NAN, GapCheck::relative_gap)
        );
    }

    let (_, weights, bias) = best;
    Ok(BinaryFit {
        weights,
        bias,
        alpha,
        checks,
        converged,
    })
}

/// One trained pair classifier: positive values favour `positive_class`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryLinearClassifier {
    pub positive_class: ClassCode,
    pub negative_class: ClassCode,
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl BinaryLinearClassifier {
    pub fn decision_value(&self, x: &SparseVector) -> f64 {
        x.dot_dense(&self.weights) + self.bias
    }
}

/// Index of pair `(i, j)`, `i < j < k`, in the canonical pair order
/// `(0,1), (0,2), …, (0,k−1), (1,2), …`.
pub fn pair_index(k: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < k);
    i * (2 * k - i - 1) / 2 + (j - i - 1)
}

/// All unordered class-index pairs in canonical order.
pub fn class_pairs(k: usize) -> Vec<(usize, usize)> {
    (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect()
}

/// Mixes the run seed with a pair position so pairs get distinct, stable
/// streams regardless of scheduling.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The samples of two classes with `+1` for the first and `−1` for the second.
pub struct PairProblem<'a> {
    pub x: Vec<&'a SparseVector>,
    pub y: Vec<f64>,
    /// Position of each pair sample in the original dataset.
    pub source: Vec<usize>,
}

pub fn pair_problem<'a>(
    x: &'a [SparseVector],
    labels: &[ClassCode],
    positive: ClassCode,
    negative: ClassCode,
) -> PairProblem<'a> {
    let mut problem = PairProblem {
        x: Vec::new(),
        y: Vec::new(),
        source: Vec::new(),
    };
    for (idx, (xi, &label)) in x.iter().zip(labels).enumerate() {
        let sign = if label == positive {
            1.0
        } else if label == negative {
            -1.0
        } else {
            continue;
        };
        problem.x.push(xi);
        problem.y.push(sign);
        problem.source.push(idx);
    }
    problem
}

/// Splits classes into those with at least `min_count` samples (sorted) and
/// those dropped, logging a warning for the latter.
pub fn surviving_classes(labels: &[ClassCode], min_count: usize) -> (Vec<ClassCode>, Vec<(ClassCode, usize)>) {
    let mut counts: BTreeMap<ClassCode, usize> = BTreeMap::new();
    for &label in labels {
        *counts.entry(label).or_default() += 1;
    }
    let (keep, drop): (Vec<_>, Vec<_>) = counts.into_iter().partition(|&(_, n)| n >= min_count);
    if !drop.is_empty() {
        let listed: Vec<String> = drop.iter().map(|(c, n)| format!("{c} ({n})")).collect();
        log::warn!(
            "dropping {} class(es) with fewer than {min_count} samples: {}",
            drop.len(),
            listed.join(", ")
        );
    }
    (keep.into_iter().map(|(c, _)| c).collect(), drop)
}

/// Uncalibrated one-vs-one ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct OneVsOne {
    pub classes: Vec<ClassCode>,
    pub pairs: Vec<BinaryLinearClassifier>,
    pub dropped: Vec<(ClassCode, usize)>,
}

/// Trains one classifier per unordered pair of surviving classes, each on that
/// pair's samples only. Pairs train in parallel; results are in canonical
/// pair order.
pub fn train_one_vs_one(
    x: &[SparseVector],
    labels: &[ClassCode],
    dim: usize,
    cfg: &TrainConfig,
    min_class_count: usize,
) -> Result<OneVsOne, LearnError> {
    cfg.validate()?;
    if x.len() != labels.len() {
        return Err(LearnError::LengthMismatch {
            samples: x.len(),
            labels: labels.len(),
        });
    }
    let (classes, dropped) = surviving_classes(labels, min_class_count);
    if classes.len() < 2 {
        return Err(LearnError::TooFewClasses {
            found: classes.len(),
            min: min_class_count,
        });
    }
    let pairs = class_pairs(classes.len())
        .into_par_iter()
        .enumerate()
        .map(|(p, (i, j))| {
            let problem = pair_problem(x, labels, classes[i], classes[j]);
            let pair_cfg = cfg.with_seed(derive_seed(cfg.seed, p as u64));
            let fit = train_binary(&problem.x, &problem.y, dim, &pair_cfg)?;
            Ok(BinaryLinearClassifier {
                positive_class: classes[i],
                negative_class: classes[j],
                weights: fit.weights,
                bias: fit.bias,
            })
        })
        .collect::<Result<Vec<_>, LearnError>>()?;
    Ok(OneVsOne {
        classes,
        pairs,
        dropped,
    })
}

/// Raw decision value of every pair classifier, in pair order.
pub fn decision_values(pairs: &[BinaryLinearClassifier], x: &SparseVector) -> Vec<f64> {
    pairs.iter().map(|p| p.decision_value(x)).collect()
}
