//! Python bindings: text normalization, training, persistence and ranked
//! suggestions.

use std::path::PathBuf;

use catmat_core::evaluate;
use catmat_core::persist;
use catmat_core::suggest::{self, ClassLabels};
use catmat_core::textprep;
use catmat_core::{ClassCode, ModelConfig, MulticlassModel};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_codes(codes: &[String]) -> PyResult<Vec<ClassCode>> {
    codes.iter().map(|c| c.parse().map_err(value_error)).collect()
}

/// Lowercased, letters-only tokens after plural reduction.
#[pyfunction]
fn normalize(text: &str) -> Vec<String> {
    textprep::normalize(text).tokens
}

#[pyfunction]
fn singularize(word: &str) -> String {
    textprep::singularize(word)
}

/// Fraction of rows whose truth is among the first `k` ranked codes.
#[pyfunction]
fn top_k_accuracy(ranked: Vec<Vec<String>>, truths: Vec<String>, k: usize) -> PyResult<f64> {
    let ranked: Vec<Vec<ClassCode>> = ranked.iter().map(|r| parse_codes(r)).collect::<PyResult<_>>()?;
    evaluate::top_k_accuracy(&ranked, &parse_codes(&truths)?, k).map_err(value_error)
}

#[pyclass(frozen, module = "catmat")]
struct Model {
    inner: MulticlassModel,
    version: String,
}

impl Model {
    fn wrap(inner: MulticlassModel) -> Model {
        let version = persist::fingerprint(&persist::to_bytes(&inner));
        Model { inner, version }
    }
}

#[pymethods]
impl Model {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Model> {
        let loaded = persist::load(&path).map_err(|e| PyIOError::new_err(e.to_string()))?;
        Ok(Model {
            inner: loaded.model,
            version: loaded.fingerprint,
        })
    }

    /// Trains on raw descriptions and 4-digit class codes.
    #[staticmethod]
    #[pyo3(signature = (descriptions, labels, *, c=1.0, seed=0, min_class_count=10, folds=5, max_epochs=1000, dual_gap_tol=1e-4))]
    #[allow(clippy::too_many_arguments)]
    fn train(
        py: Python<'_>,
        descriptions: Vec<String>,
        labels: Vec<String>,
        c: f64,
        seed: u64,
        min_class_count: usize,
        folds: usize,
        max_epochs: usize,
        dual_gap_tol: f64,
    ) -> PyResult<Model> {
        let labels = parse_codes(&labels)?;
        let config = ModelConfig {
            c,
            max_epochs,
            dual_gap_tol,
            seed,
            min_class_count,
            folds,
        };
        let inner = py
            .detach(|| {
                let docs: Vec<_> = descriptions.iter().map(|d| textprep::normalize(d)).collect();
                MulticlassModel::train(&docs, &labels, &config, docs.len() as u64)
            })
            .map_err(value_error)?
            .0;
        Ok(Model::wrap(inner))
    }

    /// Writes the model atomically; returns the number of bytes written.
    fn save(&self, path: PathBuf) -> PyResult<u64> {
        persist::save(&self.inner, &path).map_err(|e| PyIOError::new_err(e.to_string()))
    }

    #[getter]
    fn classes(&self) -> Vec<String> {
        self.inner.classes().iter().map(ToString::to_string).collect()
    }

    #[getter]
    fn vocabulary_size(&self) -> usize {
        self.inner.vocabulary().len()
    }

    #[getter]
    fn version(&self) -> &str {
        &self.version
    }

    /// Every class with its probability, most likely first.
    fn predict_distribution(&self, description: &str) -> Vec<(String, f64)> {
        self.inner
            .predict_text(description)
            .ranked()
            .into_iter()
            .map(|(c, p)| (c.to_string(), p))
            .collect()
    }

    /// Same payload as the HTTP classify endpoint, as a dict.
    #[pyo3(signature = (description, k=None, labels=None))]
    fn suggest<'py>(
        &self,
        py: Python<'py>,
        description: &str,
        k: Option<usize>,
        labels: Option<std::collections::BTreeMap<String, String>>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let labels = match labels {
            Some(map) => ClassLabels(
                map.into_iter()
                    .map(|(code, name)| Ok((code.parse().map_err(value_error)?, name)))
                    .collect::<PyResult<_>>()?,
            ),
            None => ClassLabels::default(),
        };
        let response = suggest::suggest(&self.inner, &labels, &self.version, description, k).map_err(value_error)?;
        let items = response
            .suggestions
            .iter()
            .map(|s| {
                let item = PyDict::new(py);
                item.set_item("class_code", s.class_code.to_string())?;
                item.set_item("label", s.label.as_deref())?;
                item.set_item("probability", s.probability)?;
                Ok(item)
            })
            .collect::<PyResult<Vec<_>>>()?;
        let out = PyDict::new(py);
        out.set_item("suggestions", items)?;
        out.set_item("model_version", &response.model_version)?;
        out.set_item("fallback", response.fallback)?;
        Ok(out)
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(version={:?}, classes={}, vocabulary_size={})",
            self.version,
            self.inner.classes().len(),
            self.inner.vocabulary().len()
        )
    }
}

#[pymodule]
fn catmat(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(normalize, m)?)?;
    m.add_function(wrap_pyfunction!(singularize, m)?)?;
    m.add_function(wrap_pyfunction!(top_k_accuracy, m)?)?;
    m.add_class::<Model>()?;
    Ok(())
}
