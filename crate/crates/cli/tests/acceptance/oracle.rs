//! Reference implementations used only by the acceptance checks. None of
//! them call into catmat-core.

use std::collections::BTreeMap;

/// Dense TF-IDF: hapaxes dropped, `tf · ln(n / df)`, then L2 normalization.
/// Returns the surviving words in sorted order and one dense row per document.
pub fn dense_tfidf(docs: &[Vec<String>]) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut corpus_freq: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in docs {
        for w in doc {
            *corpus_freq.entry(w).or_default() += 1;
        }
    }
    let words: Vec<String> = corpus_freq
        .iter()
        .filter(|(_, &cf)| cf >= 2)
        .map(|(w, _)| w.to_string())
        .collect();
    let n = docs.len() as f64;
    let counts: Vec<Vec<f64>> = docs
        .iter()
        .map(|doc| {
            words
                .iter()
                .map(|w| doc.iter().filter(|t| *t == w).count() as f64)
                .collect()
        })
        .collect();
    let idf: Vec<f64> = (0..words.len())
        .map(|j| {
            let df = counts.iter().filter(|row| row[j] > 0.0).count() as f64;
            (n / df).ln()
        })
        .collect();
    let rows = counts
        .iter()
        .map(|row| {
            let weighted: Vec<f64> = row.iter().zip(&idf).map(|(tf, idf)| tf * idf).collect();
            let norm = weighted.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                weighted
            } else {
                weighted.iter().map(|v| v / norm).collect()
            }
        })
        .collect();
    (words, rows)
}

/// Result of minimizing `½ αᵀQα − Σα` over the box `[0, C]ⁿ`.
pub struct BoxQp {
    /// Dual objective `Σα − ½ αᵀQα` (the negated minimum).
    pub dual: f64,
    /// Certified primal value for the SVM that produced `Q`.
    pub primal: f64,
}

fn matvec(q: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    q.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

fn largest_eigenvalue(q: &[Vec<f64>]) -> f64 {
    let n = q.len();
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut lambda = 0.0;
    for _ in 0..500 {
        let w = matvec(q, &v);
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 1.0;
        }
        lambda = norm;
        v = w.iter().map(|x| x / norm).collect();
    }
    lambda
}

/// L1-hinge SVM with the bias as an extra, regularized constant feature:
/// `min ½(‖w‖² + b²) + C Σ max(0, 1 − y(w·x + b))`.
///
/// Solved in the dual with accelerated projected gradient (FISTA with
/// adaptive restart) until the duality gap is below `rel_gap` relative.
pub fn svm_dual_qp(x: &[Vec<f64>], y: &[f64], c: f64, rel_gap: f64) -> BoxQp {
    let n = x.len();
    let aug: Vec<Vec<f64>> = x.iter().map(|xi| xi.iter().copied().chain([1.0]).collect()).collect();
    let q: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| y[i] * y[j] * aug[i].iter().zip(&aug[j]).map(|(a, b)| a * b).sum::<f64>())
                .collect()
        })
        .collect();
    let step = 1.0 / (largest_eigenvalue(&q) * 1.01);
    let dual_of = |a: &[f64]| {
        let qa = matvec(&q, a);
        a.iter().sum::<f64>() - 0.5 * a.iter().zip(&qa).map(|(u, v)| u * v).sum::<f64>()
    };
    let primal_of = |a: &[f64]| {
        let dim = aug[0].len();
        let mut w = vec![0.0; dim];
        for i in 0..n {
            for d in 0..dim {
                w[d] += a[i] * y[i] * aug[i][d];
            }
        }
        let reg = 0.5 * w.iter().map(|v| v * v).sum::<f64>();
        let loss: f64 = (0..n)
            .map(|i| (1.0 - y[i] * aug[i].iter().zip(&w).map(|(u, v)| u * v).sum::<f64>()).max(0.0))
            .sum();
        reg + c * loss
    };

    let mut alpha = vec![0.0; n];
    let mut momentum = alpha.clone();
    let mut t = 1.0f64;
    let mut best = (f64::NEG_INFINITY, alpha.clone());
    for iter in 0..2_000_000 {
        let grad = matvec(&q, &momentum);
        let next: Vec<f64> = momentum
            .iter()
            .zip(&grad)
            .map(|(m, g)| (m - step * (g - 1.0)).clamp(0.0, c))
            .collect();
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        // restart the momentum when it points uphill
        let uphill: f64 = momentum
            .iter()
            .zip(&next)
            .zip(&alpha)
            .map(|((m, nx), a)| (m - nx) * (nx - a))
            .sum();
        if uphill > 0.0 {
            t = 1.0;
            momentum = next.clone();
        } else {
            momentum = next
                .iter()
                .zip(&alpha)
                .map(|(nx, a)| nx + (t - 1.0) / t_next * (nx - a))
                .collect();
            t = t_next;
        }
        alpha = next;
        if iter % 50 == 0 {
            let dual = dual_of(&alpha);
            if dual > best.0 {
                best = (dual, alpha.clone());
            }
            let primal = primal_of(&alpha);
            if primal - dual <= rel_gap * primal.abs() {
                return BoxQp { dual, primal };
            }
        }
    }
    let primal = primal_of(&best.1);
    BoxQp { dual: best.0, primal }
}

/// Negative log-likelihood of `1 / (1 + exp(A f + B))` against smoothed
/// targets, written directly from the definition.
pub fn platt_nll(scores: &[(f64, bool)], a: f64, b: f64) -> f64 {
    let n_pos = scores.iter().filter(|s| s.1).count() as f64;
    let n_neg = scores.len() as f64 - n_pos;
    let t_pos = (n_pos + 1.0) / (n_pos + 2.0);
    let t_neg = 1.0 / (n_neg + 2.0);
    scores
        .iter()
        .map(|&(f, positive)| {
            let t = if positive { t_pos } else { t_neg };
            let z = a * f + b;
            // log p = −log(1 + e^z), log(1 − p) = z − log(1 + e^z)
            let softplus = if z > 0.0 {
                z + (-z).exp().ln_1p()
            } else {
                z.exp().ln_1p()
            };
            t * softplus + (1.0 - t) * (softplus - z)
        })
        .sum()
}

/// Grid search over `(A, B)` followed by damped Newton from the best cell.
pub fn platt_oracle(scores: &[(f64, bool)]) -> (f64, f64, f64) {
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..=160 {
        let a = -40.0 + 0.5 * i as f64;
        for j in 0..=120 {
            let b = -15.0 + 0.25 * j as f64;
            let v = platt_nll(scores, a, b);
            if v < best.0 {
                best = (v, a, b);
            }
        }
    }
    let n_pos = scores.iter().filter(|s| s.1).count() as f64;
    let n_neg = scores.len() as f64 - n_pos;
    let t_pos = (n_pos + 1.0) / (n_pos + 2.0);
    let t_neg = 1.0 / (n_neg + 2.0);
    let (mut value, mut a, mut b) = best;
    for _ in 0..500 {
        let (mut ga, mut gb, mut haa, mut hab, mut hbb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &(f, positive) in scores {
            let t = if positive { t_pos } else { t_neg };
            let p = 1.0 / (1.0 + (a * f + b).exp());
            // d/dz of the per-sample loss is t − p
            ga += (t - p) * f;
            gb += t - p;
            let w = p * (1.0 - p);
            haa += w * f * f;
            hab += w * f;
            hbb += w;
        }
        if ga.abs().max(gb.abs()) < 1e-13 {
            break;
        }
        let det = haa * hbb - hab * hab;
        let (da, db) = (-(hbb * ga - hab * gb) / det, -(haa * gb - hab * ga) / det);
        let mut s = 1.0;
        loop {
            let v = platt_nll(scores, a + s * da, b + s * db);
            if v <= value || s < 1e-12 {
                if v <= value {
                    a += s * da;
                    b += s * db;
                    value = v;
                }
                break;
            }
            s *= 0.5;
        }
    }
    (value, a, b)
}
