//! From decision values to class probabilities.
//!
//! Every pair classifier gets a sigmoid `P(positive | f) = 1 / (1 + exp(A·f + B))`
//! fitted on out-of-fold decision values. At prediction time the pairwise
//! probabilities `r_ij` are coupled into one distribution by minimizing
//! `Σ_i Σ_{j≠i} (r_ji·p_i − r_ij·p_j)²` over the probability simplex.

use std::borrow::Borrow;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::learner::{self, BinaryLinearClassifier, LearnError, TrainConfig};
use crate::vectorize::SparseVector;
use crate::ClassCode;

/// Pairwise probabilities are clipped to `[MIN_PAIR_PROB, 1 − MIN_PAIR_PROB]`
/// before coupling so that no row of the coupling system vanishes.
pub const MIN_PAIR_PROB: f64 = 1e-7;

const SIGMOID_MAX_ITER: usize = 100;
const SIGMOID_GRAD_TOL: f64 = 1e-10;
const SIGMOID_MIN_STEP: f64 = 1e-10;
const SIGMOID_RIDGE: f64 = 1e-12;

const COUPLE_MAX_ITER: usize = 10_000;
const COUPLE_TOL: f64 = 1e-10;
const COUPLE_CONSISTENCY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CalibrateError {
    #[error("insufficient samples for calibration: class {label:+} has {count} samples, need {folds}")]
    InsufficientSamples { label: f64, count: usize, folds: usize },
    #[error("need at least 2 folds, got {0}")]
    TooFewFolds(usize),
    #[error("non-finite score {value} at position {index}")]
    NonFiniteScore { value: f64, index: usize },
    #[error("sigmoid fitting needs both positive and negative labels")]
    MissingLabel,
    #[error("inconsistent pairwise probabilities: r[{i}][{j}] + r[{j}][{i}] = {sum}")]
    InconsistentPairwise { i: usize, j: usize, sum: f64 },
    #[error("pairwise probability r[{i}][{j}] = {value} is outside (0, 1)")]
    PairwiseOutOfRange { i: usize, j: usize, value: f64 },
    #[error("pairwise matrix must be square and non-empty")]
    BadShape,
    #[error(transparent)]
    Learn(#[from] LearnError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmoidParams {
    pub a: f64,
    pub b: f64,
}

impl SigmoidParams {
    /// `1 / (1 + exp(A·f + B))`, evaluated without overflow.
    pub fn probability(&self, decision_value: f64) -> f64 {
        let z = self.a * decision_value + self.b;
        if z >= 0.0 {
            let e = (-z).exp();
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + z.exp())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmoidFit {
    pub params: SigmoidParams,
    pub objective: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
}

/// Smoothed targets `(N₊+1)/(N₊+2)` for positives and `1/(N₋+2)` for negatives.
pub fn platt_targets(labels: impl IntoIterator<Item = f64> + Clone) -> (f64, f64) {
    let n_pos = labels.clone().into_iter().filter(|&y| y > 0.0).count() as f64;
    let n_neg = labels.into_iter().filter(|&y| y <= 0.0).count() as f64;
    ((n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0))
}

/// Negative log-likelihood of `(A, B)` against the smoothed targets.
pub fn sigmoid_objective(scores: &[(f64, f64)], params: SigmoidParams) -> f64 {
    let (hi, lo) = platt_targets(scores.iter().map(|s| s.1));
    scores
        .iter()
        .map(|&(f, y)| {
            let t = if y > 0.0 { hi } else { lo };
            let z = params.a * f + params.b;
            if z >= 0.0 {
                t * z + (-z).exp().ln_1p()
            } else {
                (t - 1.0) * z + z.exp().ln_1p()
            }
        })
        .sum()
}

fn gradient_inf_norm(scores: &[(f64, f64)], targets: &[f64], params: SigmoidParams) -> f64 {
    let (mut g1, mut g2) = (0.0f64, 0.0f64);
    for (&(f, _), &t) in scores.iter().zip(targets) {
        let d1 = t - params.probability(f);
        g1 += f * d1;
        g2 += d1;
    }
    g1.abs().max(g2.abs())
}

/// Fits `(A, B)` to `(decision value, ±1 label)` pairs by Newton's method with
/// backtracking line search.
pub fn fit_sigmoid(scores: &[(f64, f64)]) -> Result<SigmoidFit, CalibrateError> {
    if let Some((index, &(value, _))) = scores.iter().enumerate().find(|(_, s)| !s.0.is_finite()) {
        return Err(CalibrateError::NonFiniteScore { value, index });
    }
    let n_pos = scores.iter().filter(|s| s.1 > 0.0).count() as f64;
    let n_neg = scores.len() as f64 - n_pos;
    if n_pos == 0.0 || n_neg == 0.0 {
        return Err(CalibrateError::MissingLabel);
    }
    let hi = (n_pos + 1.0) / (n_pos + 2.0);
    let lo = 1.0 / (n_neg + 2.0);
    let targets: Vec<f64> = scores.iter().map(|s| if s.1 > 0.0 { hi } else { lo }).collect();

    let mut params = SigmoidParams {
        a: 0.0,
        b: ((n_neg + 1.0) / (n_pos + 1.0)).ln(),
    };
    let mut fval = sigmoid_objective(scores, params);
    let mut iterations = 0;
    let mut gradient_norm;

    loop {
        let (mut h11, mut h22, mut h21) = (SIGMOID_RIDGE, SIGMOID_RIDGE, 0.0);
        let (mut g1, mut g2) = (0.0, 0.0);
        for (&(f, _), &t) in scores.iter().zip(&targets) {
            let p = params.probability(f);
            let d2 = p * (1.0 - p);
            h11 += f * f * d2;
            h22 += d2;
            h21 += f * d2;
            let d1 = t - p;
            g1 += f * d1;
            g2 += d1;
        }
        gradient_norm = g1.abs().max(g2.abs());
        if gradient_norm < SIGMOID_GRAD_TOL || iterations >= SIGMOID_MAX_ITER {
            break;
        }
        iterations += 1;

        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;

        let mut step = 1.0;
        let mut accepted = false;
        while step >= SIGMOID_MIN_STEP {
            let trial = SigmoidParams {
                a: params.a + step * da,
                b: params.b + step * db,
            };
            let new_f = sigmoid_objective(scores, trial);
            let sufficient = new_f < fval + 1e-4 * step * gd;
            // near the optimum the predicted decrease drops below the rounding
            // error of the objective; fall back to the gradient there
            let flat_but_better = !sufficient
                && new_f <= fval + 4.0 * f64::EPSILON * fval.abs()
                && gradient_inf_norm(scores, &targets, trial) < gradient_norm;
            if sufficient || flat_but_better {
                params = trial;
                fval = new_f;
                accepted = true;
                break;
            }
            step /= 2.0;
        }
        if !accepted {
            // no further decrease representable in floating point
            break;
        }
    }

    Ok(SigmoidFit {
        params,
        objective: fval,
        iterations,
        gradient_norm,
    })
}

/// Stratified assignment of samples to folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    assignment: Vec<usize>,
    folds: usize,
}

impl FoldPlan {
    pub fn folds(&self) -> usize {
        self.folds
    }

    pub fn fold_of(&self, sample: usize) -> usize {
        self.assignment[sample]
    }

    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] != fold)
            .collect()
    }
}

/// Shuffles each label group with a seeded generator and deals it round-robin
/// into `folds` folds.
pub fn stratified_folds(labels: &[f64], folds: usize, seed: u64) -> Result<FoldPlan, CalibrateError> {
    if folds < 2 {
        return Err(CalibrateError::TooFewFolds(folds));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; labels.len()];
    for sign in [1.0, -1.0] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == sign).collect();
        if members.len() < folds {
            return Err(CalibrateError::InsufficientSamples {
                label: sign,
                count: members.len(),
                folds,
            });
        }
        members.shuffle(&mut rng);
        for (pos, &i) in members.iter().enumerate() {
            assignment[i] = pos % folds;
        }
    }
    Ok(FoldPlan { assignment, folds })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossValScores {
    /// `(out-of-fold decision value, label)` per sample, in input order.
    pub scores: Vec<(f64, f64)>,
    pub plan: FoldPlan,
}

/// Out-of-fold decision values for one binary problem: every sample is scored
/// by a model trained on the other folds only.
pub fn crossval_scores<V: Borrow<SparseVector>>(
    x: &[V],
    y: &[f64],
    dim: usize,
    cfg: &TrainConfig,
    folds: usize,
) -> Result<CrossValScores, CalibrateError> {
    if x.len() != y.len() {
        return Err(LearnError::LengthMismatch {
            samples: x.len(),
            labels: y.len(),
        }
        .into());
    }
    cfg.validate()?;
    let plan = stratified_folds(y, folds, cfg.seed)?;
    let mut scores = vec![(f64::NAN, 0.0); x.len()];
    for fold in 0..folds {
        let train = plan.train_indices(fold);
        let fold_x: Vec<&SparseVector> = train.iter().map(|&i| x[i].borrow()).collect();
        let fold_y: Vec<f64> = train.iter().map(|&i| y[i]).collect();
        let fold_cfg = cfg.with_seed(learner::derive_seed(cfg.seed, fold as u64 + 1));
        let fit = learner::train_binary(&fold_x, &fold_y, dim, &fold_cfg)?;
        for i in plan.test_indices(fold) {
            scores[i] = (fit.decision_value(x[i].borrow()), y[i]);
        }
    }
    Ok(CrossValScores { scores, plan })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    pub probs: Vec<f64>,
    pub iterations: usize,
    /// Coupling objective after each sweep; filled only by [`couple_traced`].
    pub objective_trace: Vec<f64>,
}

/// `Σ_i Σ_{j≠i} (r_ji·p_i − r_ij·p_j)²`.
pub fn coupling_objective(r: &[Vec<f64>], p: &[f64]) -> f64 {
    let k = p.len();
    let mut total = 0.0;
    for i in 0..k {
        for j in 0..k {
            if i != j {
                let d = r[j][i] * p[i] - r[i][j] * p[j];
                total += d * d;
            }
        }
    }
    total
}

#[allow(clippy::needless_range_loop)]
fn validate_pairwise(r: &[Vec<f64>]) -> Result<usize, CalibrateError> {
    let k = r.len();
    if k == 0 || r.iter().any(|row| row.len() != k) {
        return Err(CalibrateError::BadShape);
    }
    for i in 0..k {
        for j in 0..k {
            if i == j {
                continue;
            }
            let value = r[i][j];
            if !(value > 0.0 && value < 1.0) {
                return Err(CalibrateError::PairwiseOutOfRange { i, j, value });
            }
            let sum = value + r[j][i];
            if (sum - 1.0).abs() > COUPLE_CONSISTENCY_TOL {
                return Err(CalibrateError::InconsistentPairwise { i, j, sum });
            }
        }
    }
    Ok(k)
}

/// Couples pairwise probabilities `r[i][j] ≈ P(i | i or j)` into one
/// distribution. Diagonal entries are ignored.
pub fn couple(r: &[Vec<f64>]) -> Result<Coupling, CalibrateError> {
    couple_inner(r, false)
}

/// Like [`couple`], also recording the objective after every sweep.
pub fn couple_traced(r: &[Vec<f64>]) -> Result<Coupling, CalibrateError> {
    couple_inner(r, true)
}

fn couple_inner(r: &[Vec<f64>], trace: bool) -> Result<Coupling, CalibrateError> {
    let k = validate_pairwise(r)?;
    let mut objective_trace = Vec::new();
    match k {
        1 => {
            return Ok(Coupling {
                probs: vec![1.0],
                iterations: 0,
                objective_trace,
            })
        }
        2 => {
            let probs = vec![r[0][1], r[1][0]];
            if trace {
                objective_trace.push(coupling_objective(r, &probs));
            }
            return Ok(Coupling {
                probs,
                iterations: 0,
                objective_trace,
            });
        }
        _ => {}
    }

    let mut q = vec![vec![0.0; k]; k];
    for t in 0..k {
        for j in 0..k {
            if j != t {
                q[t][t] += r[j][t] * r[j][t];
                q[t][j] = -r[j][t] * r[t][j];
            }
        }
    }

    let mut p = vec![1.0 / k as f64; k];
    let mut qp: Vec<f64> = (0..k).map(|t| (0..k).map(|j| q[t][j] * p[j]).sum()).collect();
    let mut pqp: f64 = p.iter().zip(&qp).map(|(a, b)| a * b).sum();
    if trace {
        objective_trace.push(coupling_objective(r, &p));
    }
    let mut previous = p.clone();
    let mut iterations = 0;
    while iterations < COUPLE_MAX_ITER {
        iterations += 1;
        for t in 0..k {
            let diff = (pqp - qp[t]) / q[t][t];
            p[t] += diff;
            let scale = 1.0 + diff;
            pqp = (pqp + diff * (diff * q[t][t] + 2.0 * qp[t])) / (scale * scale);
            for j in 0..k {
                qp[j] = (qp[j] + diff * q[t][j]) / scale;
                p[j] /= scale;
            }
        }
        let sum: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= sum);
        if trace {
            objective_trace.push(coupling_objective(r, &p));
        }
        let change = p.iter().zip(&previous).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if change < COUPLE_TOL {
            break;
        }
        previous.copy_from_slice(&p);
        // refresh the running products to keep rounding from accumulating
        for t in 0..k {
            qp[t] = (0..k).map(|j| q[t][j] * p[j]).sum();
        }
        pqp = p.iter().zip(&qp).map(|(a, b)| a * b).sum();
    }
    if iterations == COUPLE_MAX_ITER {
        log::debug!("pairwise coupling hit the iteration limit ({COUPLE_MAX_ITER})");
    }
    Ok(Coupling {
        probs: p,
        iterations,
        objective_trace,
    })
}

/// A pair classifier together with its probability sigmoid.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibratedPair {
    pub classifier: BinaryLinearClassifier,
    pub sigmoid: SigmoidParams,
}

/// Probabilities over the model's classes, in class order.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassDistribution {
    pub classes: Vec<ClassCode>,
    pub probs: Vec<f64>,
}

impl ClassDistribution {
    /// `(class, probability)` by descending probability; equal probabilities
    /// are ordered by ascending class code.
    pub fn ranked(&self) -> Vec<(ClassCode, f64)> {
        let mut ranked: Vec<(ClassCode, f64)> = self.classes.iter().copied().zip(self.probs.iter().copied()).collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        ranked
    }

    pub fn get(&self, class: ClassCode) -> Option<f64> {
        self.classes.iter().position(|&c| c == class).map(|i| self.probs[i])
    }
}

/// Pairwise probability matrix from raw decision values (pairs in canonical
/// order over `k` classes).
pub fn pairwise_matrix(pairs: &[CalibratedPair], decision_values: &[f64], k: usize) -> Vec<Vec<f64>> {
    let mut r = vec![vec![0.5; k]; k];
    for ((i, j), (pair, &f)) in learner::class_pairs(k)
        .into_iter()
        .zip(pairs.iter().zip(decision_values))
    {
        let p = pair.sigmoid.probability(f).clamp(MIN_PAIR_PROB, 1.0 - MIN_PAIR_PROB);
        r[i][j] = p;
        r[j][i] = 1.0 - p;
    }
    r
}

/// Distribution over `classes` for one document vector.
pub fn predict_distribution(classes: &[ClassCode], pairs: &[CalibratedPair], x: &SparseVector) -> ClassDistribution {
    let k = classes.len();
    debug_assert_eq!(pairs.len(), k * (k - 1) / 2);
    let values: Vec<f64> = pairs.iter().map(|p| p.classifier.decision_value(x)).collect();
    let r = pairwise_matrix(pairs, &values, k);
    let probs = couple(&r).expect("clipped sigmoid outputs are consistent").probs;
    ClassDistribution {
        classes: classes.to_vec(),
        probs,
    }
}
