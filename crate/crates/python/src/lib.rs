//! Python bindings. Structured values cross the boundary as JSON and come
//! out as plain dicts and lists.

pub mod ops;

use ops::BindError;
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use reqpath_core::kb::{load_kb, seed_kb, KnowledgeBase};
use reqpath_core::workflow::Journal;
use serde_json::Value;

create_exception!(reqpath_py, ReqpathError, PyValueError, "Raised with `(code, message)` arguments.");

impl From<BindError> for PyErr {
    fn from(e: BindError) -> Self {
        ReqpathError::new_err((e.code, e.message))
    }
}

fn to_py(py: Python<'_>, value: &Value) -> PyResult<Py<PyAny>> {
    let json = py.import("json")?;
    Ok(json.call_method1("loads", (value.to_string(),))?.unbind())
}

fn from_py(obj: &Bound<'_, PyAny>) -> PyResult<Value> {
    let json = obj.py().import("json")?;
    let text: String = json.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| ReqpathError::new_err(("invalid_argument", e.to_string())))
}

/// A loaded, validated catalog.
#[pyclass(name = "KnowledgeBase", frozen)]
struct PyKb(KnowledgeBase);

#[pymethods]
impl PyKb {
    #[staticmethod]
    fn seed() -> Self {
        PyKb(seed_kb())
    }

    #[staticmethod]
    fn from_json(source: &str) -> PyResult<Self> {
        Ok(PyKb(load_kb(source).map_err(BindError::from)?))
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    #[getter]
    fn version(&self) -> &str {
        self.0.version()
    }

    fn activity_ids(&self) -> Vec<String> {
        self.0.activities().iter().map(|a| a.id.clone()).collect()
    }

    fn criterion_ids(&self) -> Vec<String> {
        self.0.criteria().iter().map(|c| c.id.clone()).collect()
    }

    fn activity(&self, py: Python<'_>, id: &str) -> PyResult<Py<PyAny>> {
        to_py(py, &ops::activity(&self.0, id)?)
    }

    fn __repr__(&self) -> String {
        format!(
            "KnowledgeBase(version={:?}, activities={})",
            self.0.version(),
            self.0.activities().len()
        )
    }
}

/// A workflow session and its operation log.
#[pyclass(name = "Session")]
struct PySession {
    kb: Py<PyKb>,
    journal: Journal,
}

#[pymethods]
impl PySession {
    /// `needs` is a list of `{"id", "statement", "source"?}` dicts.
    #[new]
    fn new(kb: Py<PyKb>, id: &str, needs: &Bound<'_, PyAny>) -> PyResult<Self> {
        let journal = ops::create_session(&kb.get().0, id, from_py(needs)?)?;
        Ok(PySession { kb, journal })
    }

    /// Rebuilds a session from a log produced by `log_json`.
    #[staticmethod]
    fn replay(kb: Py<PyKb>, log: &str) -> PyResult<Self> {
        let journal = ops::replay(&kb.get().0, log)?;
        Ok(PySession { kb, journal })
    }

    #[getter]
    fn id(&self) -> &str {
        self.journal.session().id()
    }

    #[getter]
    fn version(&self) -> u64 {
        self.journal.session().version()
    }

    #[getter]
    fn phase(&self) -> &'static str {
        self.journal.session().phase().as_str()
    }

    /// Applies one command, e.g. `{"op": "advance"}`. Failed commands
    /// leave the session unchanged.
    #[pyo3(signature = (command, request_id=None))]
    fn execute(&mut self, py: Python<'_>, command: &Bound<'_, PyAny>, request_id: Option<String>) -> PyResult<Py<PyAny>> {
        let applied = ops::execute(&mut self.journal, &self.kb.get().0, from_py(command)?, request_id)?;
        to_py(py, &applied)
    }

    fn snapshot(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &ops::to_value(self.journal.session()))
    }

    fn checklist(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &ops::checklist(&self.journal)?)
    }

    fn log_json(&self) -> String {
        serde_json::to_string(self.journal.log()).expect("log serializes")
    }
}

#[pyfunction]
fn validate(py: Python<'_>, source: &str) -> PyResult<Py<PyAny>> {
    to_py(py, &ops::validate_document(source)?)
}

#[pyfunction]
fn scenario(py: Python<'_>, kb: &PyKb, activity: &str) -> PyResult<Py<PyAny>> {
    to_py(py, &ops::scenario(&kb.0, activity)?)
}

#[pyfunction]
#[pyo3(signature = (kb, activity, criteria, mode="all"))]
fn filter_methods(kb: &PyKb, activity: &str, criteria: Vec<String>, mode: &str) -> PyResult<Vec<String>> {
    Ok(ops::filter(&kb.0, activity, &criteria, mode)?)
}

/// `request` is a dict with `activities`, `priority` and optionally
/// `pinned` and `tie_break`.
#[pyfunction]
fn recommend_path(py: Python<'_>, kb: &PyKb, request: &Bound<'_, PyAny>) -> PyResult<Py<PyAny>> {
    to_py(py, &ops::path(&kb.0, from_py(request)?)?)
}

#[pyfunction]
#[pyo3(signature = (kb, activities, criterion, mode="auto"))]
fn minimize(py: Python<'_>, kb: &PyKb, activities: Vec<String>, criterion: &str, mode: &str) -> PyResult<Py<PyAny>> {
    to_py(py, &ops::minimize(&kb.0, &activities, criterion, mode)?)
}

#[pymodule]
fn reqpath_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyKb>()?;
    m.add_class::<PySession>()?;
    m.add("ReqpathError", m.py().get_type::<ReqpathError>())?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(scenario, m)?)?;
    m.add_function(wrap_pyfunction!(filter_methods, m)?)?;
    m.add_function(wrap_pyfunction!(recommend_path, m)?)?;
    m.add_function(wrap_pyfunction!(minimize, m)?)?;
    Ok(())
}
