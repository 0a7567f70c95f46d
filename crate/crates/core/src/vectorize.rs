//! TF-IDF weighting and unit-length normalization of token sequences.

use std::collections::BTreeMap;

use crate::textprep::{TokenSequence, Vocabulary};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VectorizeError {
    #[error("word index {index} has document frequency 0 (corrupt vocabulary)")]
    ZeroDocFreq { index: usize },
    #[error("word index {index} has document frequency {df} greater than the document count {n_docs}")]
    DocFreqExceedsDocs { index: usize, df: u64, n_docs: u64 },
    #[error("invalid sparse vector: {0}")]
    InvalidVector(String),
    #[error("invalid idf table: {0}")]
    InvalidIdf(String),
}

/// Sorted `(index, weight)` pairs. Indices strictly increase and every stored
/// weight is positive.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector {
    entries: Vec<(u32, f64)>,
}

impl SparseVector {
    pub fn empty() -> Self {
        SparseVector::default()
    }

    /// Validates ordering and positivity.
    pub fn new(entries: Vec<(u32, f64)>) -> Result<Self, VectorizeError> {
        if let Some(w) = entries.windows(2).find(|w| w[0].0 >= w[1].0) {
            return Err(VectorizeError::InvalidVector(format!(
                "indices not strictly increasing at {}",
                w[1].0
            )));
        }
        if let Some(&(i, v)) = entries.iter().find(|e| !(e.1 > 0.0 && e.1.is_finite())) {
            return Err(VectorizeError::InvalidVector(format!(
                "weight {v} at index {i} is not a positive finite number"
            )));
        }
        Ok(SparseVector { entries })
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt()
    }

    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| v * dense[i as usize]).sum()
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut a, mut b) = (self.entries.iter().peekable(), other.entries.iter().peekable());
        let mut acc = 0.0;
        while let (Some(&&(i, x)), Some(&&(j, y))) = (a.peek(), b.peek()) {
            match i.cmp(&j) {
                std::cmp::Ordering::Less => {
                    a.next();
                }
                std::cmp::Ordering::Greater => {
                    b.next();
                }
                std::cmp::Ordering::Equal => {
                    acc += x * y;
                    a.next();
                    b.next();
                }
            }
        }
        acc
    }

    pub fn max_index(&self) -> Option<u32> {
        self.entries.last().map(|e| e.0)
    }
}

/// Inverse document frequencies `ln(n / df)` computed once from the training
/// documents.
#[derive(Debug, Clone, PartialEq)]
pub struct IdfTable {
    n_docs: u64,
    idf: Vec<f64>,
}

impl IdfTable {
    pub fn from_parts(n_docs: u64, idf: Vec<f64>) -> Result<IdfTable, VectorizeError> {
        if let Some((i, v)) = idf.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(VectorizeError::InvalidIdf(format!(
                "idf[{i}] = {v} is not a finite non-negative number"
            )));
        }
        Ok(IdfTable { n_docs, idf })
    }

    pub fn n_docs(&self) -> u64 {
        self.n_docs
    }

    pub fn len(&self) -> usize {
        self.idf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.idf.is_empty()
    }

    pub fn get(&self, index: u32) -> f64 {
        self.idf[index as usize]
    }

    pub fn values(&self) -> &[f64] {
        &self.idf
    }
}

/// Raw counts of in-vocabulary words; unknown words are dropped.
pub fn term_frequencies(doc: &TokenSequence, vocab: &Vocabulary) -> SparseVector {
    let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
    for index in doc.iter().filter_map(|t| vocab.index_of(t)) {
        *counts.entry(index).or_default() += 1;
    }
    SparseVector {
        entries: counts.into_iter().map(|(i, c)| (i, c as f64)).collect(),
    }
}

pub fn build_idf(vocab: &Vocabulary, n_docs: u64) -> Result<IdfTable, VectorizeError> {
    idf_from_doc_freqs(vocab.doc_freqs(), n_docs)
}

/// `idf_i = ln(n / df_i)`, unsmoothed.
pub fn idf_from_doc_freqs(doc_freqs: &[u64], n_docs: u64) -> Result<IdfTable, VectorizeError> {
    let idf = doc_freqs
        .iter()
        .enumerate()
        .map(|(index, &df)| match df {
            0 => Err(VectorizeError::ZeroDocFreq { index }),
            df if df > n_docs => Err(VectorizeError::DocFreqExceedsDocs { index, df, n_docs }),
            df if df == n_docs => Ok(0.0),
            df => Ok((n_docs as f64 / df as f64).ln()),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(IdfTable { n_docs, idf })
}

/// Multiplies by idf, drops zero weights and scales to unit Euclidean norm.
pub fn tfidf_normalize(tf: &SparseVector, idf: &IdfTable) -> SparseVector {
    let weighted: Vec<(u32, f64)> = tf
        .entries
        .iter()
        .map(|&(i, count)| (i, count * idf.get(i)))
        .filter(|&(_, w)| w > 0.0)
        .collect();
    let norm = weighted.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
    if norm == 0.0 {
        return SparseVector::empty();
    }
    SparseVector {
        entries: weighted.into_iter().map(|(i, w)| (i, w / norm)).collect(),
    }
}

/// Tokens to a unit TF-IDF vector.
pub fn vectorize(doc: &TokenSequence, vocab: &Vocabulary, idf: &IdfTable) -> SparseVector {
    tfidf_normalize(&term_frequencies(doc, vocab), idf)
}
