//! Python bindings. Results cross the boundary as plain Python objects
//! (dicts, lists, numbers) decoded from the same JSON the CLI prints.

use std::path::PathBuf;

use nous_core::mine::PatternEdge;
use nous_core::views::render;
use nous_core::{Engine as CoreEngine, EngineConfig, Error, PathRequest};
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use serde::Serialize;

create_exception!(nous, NousError, PyException, "Engine error; the message starts with the error name.");

fn to_py(err: Error) -> PyErr {
    NousError::new_err(err.to_string())
}

fn to_object<T: Serialize + ?Sized>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let json = py.import("json")?;
    Ok(json.call_method1("loads", (render(value),))?.unbind())
}

/// A knowledge-graph engine. With a config path, state is restored from and
/// saved to the configured data directory; without one it lives in memory.
#[pyclass(module = "nous")]
struct Engine {
    inner: CoreEngine,
}

#[pymethods]
impl Engine {
    #[new]
    #[pyo3(signature = (config=None))]
    fn new(config: Option<PathBuf>) -> PyResult<Self> {
        let inner = match config {
            Some(path) => CoreEngine::open(EngineConfig::load(&path).map_err(to_py)?),
            None => CoreEngine::new(EngineConfig::in_memory()),
        }
        .map_err(to_py)?;
        Ok(Engine { inner })
    }

    /// Loads a curated TSV knowledge base.
    fn load_kb(&mut self, py: Python<'_>, path: PathBuf) -> PyResult<Py<PyAny>> {
        let report = self.inner.load_kb(&path).map_err(to_py)?;
        to_object(py, &report)
    }

    /// Loads predicate seed phrases; returns the number of predicates.
    fn load_seeds(&mut self, path: PathBuf) -> PyResult<usize> {
        self.inner.load_seeds(&path).map_err(to_py)
    }

    /// Ingests a JSON-lines file of raw triples.
    fn ingest(&mut self, py: Python<'_>, path: PathBuf) -> PyResult<Py<PyAny>> {
        let inner = &mut self.inner;
        let report = py.detach(|| inner.ingest_file(&path)).map_err(to_py)?;
        to_object(py, &report)
    }

    /// Ingests raw triples given as JSON-lines text.
    fn ingest_lines(&mut self, py: Python<'_>, text: &str) -> PyResult<Py<PyAny>> {
        let report = self.inner.ingest_reader(text.as_bytes()).map_err(to_py)?;
        to_object(py, &report)
    }

    fn expand(&mut self, py: Python<'_>, path: PathBuf) -> PyResult<Py<PyAny>> {
        let report = self.inner.expand_file(&path).map_err(to_py)?;
        to_object(py, &report)
    }

    fn retrain(&mut self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        let inner = &mut self.inner;
        let summary = py.detach(|| inner.retrain()).map_err(to_py)?;
        to_object(py, &summary)
    }

    /// Closed frequent patterns of the live window, mined from scratch.
    fn mine(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_object(py, &self.inner.mine())
    }

    /// Ranked paths explaining how `source` relates to `target`.
    #[pyo3(signature = (source, target, rel=None, k=None, max_hops=None))]
    fn ask(
        &self,
        py: Python<'_>,
        source: String,
        target: String,
        rel: Option<String>,
        k: Option<usize>,
        max_hops: Option<usize>,
    ) -> PyResult<Py<PyAny>> {
        let req = PathRequest {
            from: source,
            to: target,
            rel,
            k,
            max_hops,
        };
        let paths = self.inner.view().paths(&req).map_err(to_py)?;
        to_object(py, &paths)
    }

    /// The entity card for `name`.
    fn entity(&self, py: Python<'_>, name: &str) -> PyResult<Py<PyAny>> {
        let card = self.inner.view().entity_card(name).map_err(to_py)?;
        to_object(py, &card)
    }

    fn trending(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_object(py, &self.inner.view().trending())
    }

    fn stats(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_object(py, &self.inner.view().stats())
    }

    /// Writes state to the data directory; a no-op in memory.
    fn save(&self) -> PyResult<()> {
        self.inner.save().map_err(to_py)
    }
}

/// Jensen-Shannon divergence of two distributions, in nats.
#[pyfunction]
fn js_divergence(p: Vec<f64>, q: Vec<f64>) -> PyResult<f64> {
    nous_core::topics::js_divergence(&p, &q).map_err(to_py)
}

/// The store's canonical form of an entity label.
#[pyfunction]
fn normalize_label(raw: &str) -> String {
    nous_core::kg::normalize_label(raw)
}

/// Canonical code of a pattern given as a list of
/// `{srcLabel, pred, dstLabel, srcVar, dstVar}` dicts.
#[pyfunction]
#[pyo3(signature = (edges, max_edges=5))]
fn canonical_code(py: Python<'_>, edges: Bound<'_, PyAny>, max_edges: usize) -> PyResult<String> {
    let text: String = py.import("json")?.call_method1("dumps", (edges,))?.extract()?;
    let edges: Vec<PatternEdge> =
        serde_json::from_str(&text).map_err(|e| to_py(Error::InvalidArgument(e.to_string())))?;
    nous_core::mine::canonical_code(&edges, max_edges).map_err(to_py)
}

#[pymodule]
#[pyo3(name = "nous")]
pub fn nous_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Engine>()?;
    m.add_function(wrap_pyfunction!(js_divergence, m)?)?;
    m.add_function(wrap_pyfunction!(normalize_label, m)?)?;
    m.add_function(wrap_pyfunction!(canonical_code, m)?)?;
    m.add("NousError", m.py().get_type::<NousError>())?;
    Ok(())
}
