//! Ranked top-k class suggestions for one description.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::model::MulticlassModel;
use crate::ClassCode;

pub const DEFAULT_K: usize = 3;
pub const MAX_K: usize = 25;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SuggestError {
    #[error("description is empty")]
    EmptyDescription,
    #[error("k must be at least 1")]
    InvalidK,
}

impl SuggestError {
    /// Stable machine-readable code for API clients.
    pub fn code(&self) -> &'static str {
        match self {
            SuggestError::EmptyDescription => "empty_description",
            SuggestError::InvalidK => "invalid_k",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suggestion {
    pub class_code: ClassCode,
    pub label: Option<String>,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuggestionResponse {
    pub suggestions: Vec<Suggestion>,
    pub model_version: String,
    /// True when no word of the description carried weight, so the ranking
    /// comes from the classifiers' bias terms alone.
    pub fallback: bool,
}

/// Human-readable class names from a sidecar JSON object such as
/// `{"4120": "air conditioning equipment"}`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassLabels(pub BTreeMap<ClassCode, String>);

#[derive(Debug, thiserror::Error)]
pub enum LabelsError {
    #[error("cannot read class labels: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid class labels file: {0}")]
    Parse(#[from] serde_json::Error),
}

impl ClassLabels {
    pub fn from_json(text: &str) -> Result<Self, LabelsError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, LabelsError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn get(&self, code: ClassCode) -> Option<&str> {
        self.0.get(&code).map(String::as_str)
    }
}

fn round4(p: f64) -> f64 {
    (p * 10_000.0).round() / 10_000.0
}

/// Normalizes, vectorizes and ranks `description`, returning the first
/// `min(k, classes)` classes. `k` defaults to 3 and is capped at 25;
/// probabilities are rounded to four decimals.
pub fn suggest(
    model: &MulticlassModel,
    labels: &ClassLabels,
    model_version: &str,
    description: &str,
    k: Option<usize>,
) -> Result<SuggestionResponse, SuggestError> {
    if description.trim().is_empty() {
        return Err(SuggestError::EmptyDescription);
    }
    let k = match k {
        Some(0) => return Err(SuggestError::InvalidK),
        Some(k) => k.min(MAX_K),
        None => DEFAULT_K,
    };
    let x = model.vectorize_text(description);
    let suggestions = model
        .predict_distribution(&x)
        .ranked()
        .into_iter()
        .take(k)
        .map(|(class_code, p)| Suggestion {
            class_code,
            label: labels.get(class_code).map(str::to_string),
            probability: round4(p),
        })
        .collect();
    Ok(SuggestionResponse {
        suggestions,
        model_version: model_version.to_string(),
        fallback: x.is_empty(),
    })
}
