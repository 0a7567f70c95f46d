//! Category suggestions for free-text product descriptions.
//!
//! The pipeline runs in this order:
//!
//! 1. [`ingest`] reads exported purchase records (JSONL or CSV) and keeps the
//!    labeled, non-service ones.
//! 2. [`textprep`] lowercases, strips non-letters and short words, reduces
//!    Portuguese plurals and builds a hapax-free [`Vocabulary`].
//! 3. [`vectorize`] turns token sequences into unit-length TF-IDF vectors.
//! 4. [`learner`] trains one linear SVM per class pair with dual coordinate
//!    descent.
//! 5. [`calibrate`] fits a Platt sigmoid per pair on cross-validated scores and
//!    couples the pairwise probabilities into one distribution.
//! 6. [`evaluate`] splits corpora and computes top-k accuracy and per-class
//!    misclassification statistics.
//! 7. [`persist`] reads and writes the versioned binary model file.
//!
//! [`model::MulticlassModel`] ties the stages together and [`suggest`] builds
//! the ranked top-k answer served to users.

pub mod calibrate;
mod class_code;
pub mod evaluate;
pub mod ingest;
pub mod learner;
pub mod model;
pub mod persist;
pub mod suggest;
pub mod textprep;
pub mod vectorize;

pub use class_code::{ClassCode, ClassCodeError};
pub use model::{ModelConfig, MulticlassModel, TrainReport};
pub use suggest::{Suggestion, SuggestionResponse};
pub use textprep::{TokenSequence, Vocabulary};
pub use vectorize::{IdfTable, SparseVector};
