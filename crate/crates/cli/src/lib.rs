//! Command line and HTTP front end for the CATMAT classifier.
//!
//! The `catmat` binary is a thin wrapper over [`commands`] and [`service`];
//! tests drive the same functions directly.

use std::path::PathBuf;

use catmat_core::evaluate::EvaluateError;
use catmat_core::ingest::IngestError;
use catmat_core::model::ModelError;
use catmat_core::persist::PersistError;
use catmat_core::suggest::{LabelsError, SuggestError};

pub mod commands;
pub mod config;
pub mod service;

pub use config::{ConfigError, TrainSettings};

/// Every failure names the pipeline stage it came from.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("ingest: {0}")]
    Ingest(#[from] IngestError),
    #[error("ingest: {path} contains no usable labeled records")]
    NoDocuments { path: PathBuf },
    #[error("split: {0}")]
    Split(EvaluateError),
    #[error("train: {0}")]
    Train(#[from] ModelError),
    #[error("persist: {0}")]
    Persist(#[from] PersistError),
    #[error("labels: {0}")]
    Labels(#[from] LabelsError),
    #[error("evaluate: {0}")]
    Evaluate(EvaluateError),
    #[error(
        "evaluate: the test split of this model was already evaluated (marker {marker}); \
         the test split is meant to be used once, tune on --split validation or pass --force"
    )]
    TestSplitUsed { marker: PathBuf },
    #[error(
        "evaluate: data has {found} labeled documents but the model was trained from {expected}; \
         the split would not match the one used in training"
    )]
    CorpusMismatch { expected: u64, found: usize },
    #[error("predict: {0}")]
    Predict(#[from] SuggestError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}
