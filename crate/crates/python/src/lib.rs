//! Python bindings: `import amq`.
//!
//! Composite results (threshold diagnostics, evaluation reports) are handed
//! to Python as plain dicts and lists built from their JSON form.

use std::path::PathBuf;
use std::sync::Arc;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::Serialize;

use amq_core::corpus::{normalize_name as core_normalize, GoldSet};
use amq_core::embedding::{synth_embeddings, EmbeddingVector};
use amq_core::evaluation::Grid;
use amq_core::lexical::rank_lexical;
use amq_core::pipeline::{run_query as core_run_query, PipelineConfig, ProbeTable, QueryInput};
use amq_core::report::{emit_reports, ExportDocument};
use amq_core::study::run_study;
use amq_core::threshold::KneeScope;
use amq_core::{Dictionary, EmbeddingStore, PreferredTerm, RetrievalResult, TermCode};

create_exception!(amq, AmqError, PyException);

fn err(e: impl std::fmt::Display) -> PyErr {
    AmqError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(err)?;
    py.import("json")?.call_method1("loads", (text,))
}

#[pyclass(name = "Dictionary", module = "amq", skip_from_py_object, frozen)]
#[derive(Clone)]
struct PyDictionary(Arc<Dictionary>);

#[pymethods]
impl PyDictionary {
    /// Loads a `code<TAB>name<TAB>group` file with a header row.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Dictionary::load(path)
            .map(|d| Self(Arc::new(d)))
            .map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (terms, version_tag = "python"))]
    fn from_terms(terms: Vec<(u64, String, Option<String>)>, version_tag: &str) -> PyResult<Self> {
        let terms = terms.into_iter().map(|(code, name, group)| PreferredTerm {
            code: TermCode(code),
            name,
            group,
        });
        Dictionary::from_terms(terms, version_tag)
            .map(|d| Self(Arc::new(d)))
            .map_err(err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.0.save(path).map_err(err)
    }

    #[getter]
    fn version_tag(&self) -> &str {
        self.0.version_tag()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __contains__(&self, code: u64) -> bool {
        self.0.contains(TermCode(code))
    }

    fn codes(&self) -> Vec<u64> {
        self.0.codes().map(|c| c.0).collect()
    }

    /// `(name, group)` of a code, or None.
    fn get(&self, code: u64) -> Option<(String, Option<String>)> {
        self.0
            .get(TermCode(code))
            .map(|t| (t.name.clone(), t.group.clone()))
    }

    /// Terms ranked by lexical similarity to `query`: `(code, name, score)`.
    #[pyo3(signature = (query, limit = 10))]
    fn search(&self, query: &str, limit: usize) -> PyResult<Vec<(u64, String, f64)>> {
        let ranked = rank_lexical(query, &self.0).map_err(err)?;
        Ok(ranked
            .into_iter()
            .take(limit)
            .filter_map(|m| Some((m.code.0, self.0.get(m.code)?.name.clone(), m.score)))
            .collect())
    }

    fn __repr__(&self) -> String {
        format!(
            "Dictionary({} terms, version {:?})",
            self.0.len(),
            self.0.version_tag()
        )
    }
}

#[pyclass(name = "EmbeddingStore", module = "amq", skip_from_py_object, frozen)]
#[derive(Clone)]
struct PyEmbeddingStore(Arc<EmbeddingStore>);

#[pymethods]
impl PyEmbeddingStore {
    /// Loads an embedding file and checks it covers `dictionary` exactly.
    #[staticmethod]
    fn load(path: PathBuf, dictionary: &PyDictionary) -> PyResult<Self> {
        EmbeddingStore::load(path, &dictionary.0)
            .map(|s| Self(Arc::new(s)))
            .map_err(err)
    }

    /// Deterministic synthetic unit vectors for every term.
    #[staticmethod]
    #[pyo3(signature = (dictionary, dim, seed = 0))]
    fn synth(dictionary: &PyDictionary, dim: usize, seed: u64) -> PyResult<Self> {
        synth_embeddings(&dictionary.0, dim, seed)
            .map(|s| Self(Arc::new(s)))
            .map_err(err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.0.save(path).map_err(err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn vector(&self, code: u64) -> Option<Vec<f64>> {
        self.0.get(TermCode(code)).map(|v| v.values().to_vec())
    }
}

#[pyclass(name = "ProbeTable", module = "amq", skip_from_py_object)]
#[derive(Clone, Default)]
struct PyProbeTable(ProbeTable);

#[pymethods]
impl PyProbeTable {
    #[new]
    fn new() -> Self {
        Self::default()
    }

    /// Loads a `text<TAB>v1,v2,...` side-table.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        ProbeTable::load(path).map(Self).map_err(err)
    }

    /// Adds a probe vector (normalized on insert) for free text.
    fn insert(&mut self, text: &str, vector: Vec<f64>) -> PyResult<()> {
        let v = EmbeddingVector::normalize(&vector).map_err(err)?;
        self.0.insert(text, v);
        Ok(())
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

#[pyclass(name = "RetrievalResult", module = "amq", frozen)]
struct PyRetrievalResult(RetrievalResult);

#[pymethods]
impl PyRetrievalResult {
    #[getter]
    fn threshold(&self) -> f64 {
        self.0.decision.threshold
    }

    /// `knee`, `two_means_boundary` or `manual`.
    #[getter]
    fn source<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.0.decision.source)
    }

    #[getter]
    fn matched_seeds<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.0.matched_seeds)
    }

    /// Every term in rank order: `(rank, code, name, score, retained)`.
    fn terms(&self) -> Vec<(usize, u64, String, f64, bool)> {
        self.0
            .all_scored
            .iter()
            .map(|t| (t.rank, t.code.0, t.name.clone(), t.sim_best_pt, t.retained))
            .collect()
    }

    /// Retained codes in rank order.
    fn retained(&self) -> Vec<u64> {
        self.0.retained().map(|t| t.code.0).collect()
    }

    /// Re-thresholds the cached scores; nothing is re-scored.
    fn apply_threshold(&self, threshold: f64) -> PyResult<Self> {
        if !(-1.0..=1.0).contains(&threshold) {
            return Err(err(format!("threshold {threshold} not in [-1, 1]")));
        }
        Ok(Self(self.0.apply_threshold(threshold)))
    }

    /// Export of the retained list, as written by `amq query --format json`.
    fn to_json(&self) -> String {
        ExportDocument::retained(&self.0).to_json()
    }

    fn to_csv(&self) -> String {
        ExportDocument::retained(&self.0).to_csv()
    }

    /// The full result, including threshold diagnostics.
    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.0)
    }

    fn __len__(&self) -> usize {
        self.0.all_scored.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "RetrievalResult({} terms, {} retained at {:.4})",
            self.0.all_scored.len(),
            self.0.retained().count(),
            self.0.decision.threshold
        )
    }
}

/// Parses a Python dict of pipeline settings through the same strict
/// schema as the HTTP API (unknown keys are errors).
fn config_from(config: Option<&Bound<'_, PyDict>>) -> PyResult<PipelineConfig> {
    let Some(d) = config else {
        return Ok(PipelineConfig::default());
    };
    let text: String = d
        .py()
        .import("json")?
        .call_method1("dumps", (d,))?
        .extract()?;
    serde_json::from_str(&text).map_err(|e| err(format!("config: {e}")))
}

/// Runs one query (one or more input terms pooled together).
#[pyfunction]
#[pyo3(signature = (terms, dictionary, store, probes = None, config = None, threshold = None))]
fn run_query(
    py: Python<'_>,
    terms: Vec<String>,
    dictionary: &PyDictionary,
    store: &PyEmbeddingStore,
    probes: Option<&PyProbeTable>,
    config: Option<&Bound<'_, PyDict>>,
    threshold: Option<f64>,
) -> PyResult<PyRetrievalResult> {
    let mut config = config_from(config)?;
    if threshold.is_some() {
        config.manual_threshold = threshold;
    }
    let input = QueryInput::new(terms).with_config(config);
    let probes = probes.map(|p| p.0.clone()).unwrap_or_default();
    let (dict, store) = (dictionary.0.clone(), store.0.clone());
    py.detach(move || core_run_query(&input, &dict, &store, &probes))
        .map(PyRetrievalResult)
        .map_err(|e| err(format!("{} stage: {e}", e.stage())))
}

/// Evaluates a gold set over a cut-off grid. Returns the report(s) as
/// dicts; when `out_dir` is given the report files are written there too.
#[pyfunction]
#[pyo3(signature = (gold_path, dictionary, store, probes = None, grid = None, narrow_only = false, out_dir = None, config = None))]
#[allow(clippy::too_many_arguments)]
fn evaluate<'py>(
    py: Python<'py>,
    gold_path: PathBuf,
    dictionary: &PyDictionary,
    store: &PyEmbeddingStore,
    probes: Option<&PyProbeTable>,
    grid: Option<&str>,
    narrow_only: bool,
    out_dir: Option<PathBuf>,
    config: Option<&Bound<'py, PyDict>>,
) -> PyResult<Bound<'py, PyDict>> {
    let config = config_from(config)?;
    let grid = match grid {
        Some(g) => g.parse::<Grid>().map_err(err)?,
        None => Grid::default(),
    };
    let probes = probes.map(|p| p.0.clone()).unwrap_or_default();
    let (dict, store) = (dictionary.0.clone(), store.0.clone());
    let (study, files) = py
        .detach(move || -> Result<_, String> {
            let gold = GoldSet::load(&gold_path, &dict).map_err(|e| e.to_string())?;
            let study = run_study(
                &gold.queries,
                &dict,
                &store,
                &probes,
                &config,
                &grid,
                narrow_only,
            )
            .map_err(|e| e.to_string())?;
            let files = match out_dir {
                Some(dir) => emit_reports(&dir, &study.standard, study.narrow.as_ref())
                    .map_err(|e| format!("writing reports: {e}"))?,
                None => Vec::new(),
            };
            Ok((study, files))
        })
        .map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("standard", to_py(py, &study.standard)?)?;
    out.set_item("narrow", to_py(py, &study.narrow)?)?;
    out.set_item("artifacts", files)?;
    Ok(out)
}

#[pyfunction]
fn normalize_name(text: &str) -> String {
    core_normalize(text)
}

/// `1 - levenshtein / max(len)` over normalized names.
#[pyfunction]
fn lexical_ratio(a: &str, b: &str) -> PyResult<f64> {
    amq_core::lexical_ratio(a, b).map_err(err)
}

#[pyfunction]
fn two_means<'py>(py: Python<'py>, scores: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &amq_core::two_means(&scores).map_err(err)?)
}

/// Knee rank (0-based) of a descending curve, or None.
#[pyfunction]
#[pyo3(signature = (sorted_desc, sensitivity = 1.0))]
fn kneedle(sorted_desc: Vec<f64>, sensitivity: f64) -> PyResult<Option<usize>> {
    Ok(amq_core::kneedle(&sorted_desc, sensitivity)
        .map_err(err)?
        .knee_rank)
}

#[pyfunction]
#[pyo3(signature = (scores, sensitivity = 1.0, scope = "full"))]
fn auto_threshold<'py>(
    py: Python<'py>,
    scores: Vec<f64>,
    sensitivity: f64,
    scope: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let scope = match scope {
        "full" => KneeScope::Full,
        "relevant_cluster" => KneeScope::RelevantCluster,
        other => return Err(err(format!("unknown knee scope {other:?}"))),
    };
    to_py(
        py,
        &amq_core::auto_threshold(&scores, sensitivity, scope).map_err(err)?,
    )
}

#[pyfunction]
fn pearson(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    amq_core::pearson(&x, &y).map_err(err)
}

#[pymodule]
#[pyo3(name = "amq")]
fn amq_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    init(m)
}

/// Registers the module contents on `m`; used by the Rust-side tests,
/// which embed an interpreter instead of importing the built extension.
pub fn init(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("AmqError", m.py().get_type::<AmqError>())?;
    m.add_class::<PyDictionary>()?;
    m.add_class::<PyEmbeddingStore>()?;
    m.add_class::<PyProbeTable>()?;
    m.add_class::<PyRetrievalResult>()?;
    m.add_function(wrap_pyfunction!(run_query, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(normalize_name, m)?)?;
    m.add_function(wrap_pyfunction!(lexical_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(two_means, m)?)?;
    m.add_function(wrap_pyfunction!(kneedle, m)?)?;
    m.add_function(wrap_pyfunction!(auto_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(pearson, m)?)?;
    Ok(())
}
