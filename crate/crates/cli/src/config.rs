//! Training configuration files.
//!
//! A TOML file with the fields of [`ModelConfig`] plus an optional `c_grid`
//! list. Every field may be omitted:
//!
//! ```toml
//! c = 1.0
//! seed = 7
//! c_grid = [0.1, 1.0, 10.0]
//! ```

use std::path::{Path, PathBuf};

use catmat_core::model::ModelError;
use catmat_core::ModelConfig;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(#[from] toml::de::Error),
    #[error("c_grid must be a list of numbers")]
    BadGrid,
    #[error("{0}")]
    Invalid(#[from] ModelError),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainSettings {
    pub model: ModelConfig,
    /// Values of C compared on the validation split. Empty means `model.c` only.
    pub c_grid: Vec<f64>,
}

impl TrainSettings {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let mut table: toml::Table = toml::from_str(text)?;
        let c_grid = match table.remove("c_grid") {
            None => Vec::new(),
            Some(toml::Value::Array(values)) => values
                .iter()
                .map(|v| v.as_float().or_else(|| v.as_integer().map(|i| i as f64)))
                .collect::<Option<Vec<f64>>>()
                .ok_or(ConfigError::BadGrid)?,
            Some(_) => return Err(ConfigError::BadGrid),
        };
        let model: ModelConfig = toml::Value::Table(table).try_into()?;
        let settings = TrainSettings { model, c_grid };
        settings.validate()?;
        Ok(settings)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.model.validate()?;
        for config in self.candidates() {
            config.validate()?;
        }
        Ok(())
    }

    /// One model configuration per value of C to try.
    pub fn candidates(&self) -> Vec<ModelConfig> {
        if self.c_grid.is_empty() {
            return vec![self.model];
        }
        self.c_grid.iter().map(|&c| ModelConfig { c, ..self.model }).collect()
    }
}
