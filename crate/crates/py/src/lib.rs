//! Python bindings. Structured values (reports, frames, manifests, events)
//! cross the boundary as plain dicts and lists with the same shape as their
//! JSON form.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use narralive_core::analyzer;
use narralive_core::bundle::{self, BundleError, CompileOptions};
use narralive_core::runtime::{self, Event, RuntimeError, Transcript};
use narralive_core::{script, Diagnostic, Story};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict};
use serde::de::DeserializeOwned;
use serde::Serialize;

create_exception!(narralive, NarraliveError, PyException);
create_exception!(narralive, ParseError, NarraliveError);
create_exception!(narralive, InvalidStoryError, NarraliveError);
create_exception!(narralive, BundleFormatError, NarraliveError);
create_exception!(narralive, EventNotApplicable, NarraliveError);
create_exception!(narralive, NoMatch, NarraliveError);
create_exception!(narralive, SessionFinished, NarraliveError);

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn from_py<T: DeserializeOwned>(obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn diagnostics_text(diags: &[Diagnostic]) -> String {
    diags.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n")
}

fn runtime_err(e: RuntimeError) -> PyErr {
    let msg = e.to_string();
    match e {
        RuntimeError::InvalidStory(d) => InvalidStoryError::new_err(format!("{msg}\n{}", diagnostics_text(&d))),
        RuntimeError::EventNotApplicable(_) => EventNotApplicable::new_err(msg),
        RuntimeError::NoMatch(_) => NoMatch::new_err(msg),
        RuntimeError::SessionFinished => SessionFinished::new_err(msg),
    }
}

fn bundle_err(e: BundleError) -> PyErr {
    match e {
        BundleError::InvalidStory(ref d) => InvalidStoryError::new_err(format!("{e}\n{}", diagnostics_text(d))),
        other => BundleFormatError::new_err(other.to_string()),
    }
}

/// A parsed story. Immutable.
#[pyclass(name = "Story", module = "narralive", frozen)]
struct PyStory {
    inner: Arc<Story>,
}

impl PyStory {
    fn wrap(s: Story) -> Self {
        PyStory { inner: Arc::new(s) }
    }
}

#[pymethods]
impl PyStory {
    /// Parses `.story` source text. Raises ParseError listing every problem.
    #[staticmethod]
    fn parse(source: &str) -> PyResult<Self> {
        script::parse(source)
            .map(PyStory::wrap)
            .map_err(|d| ParseError::new_err(diagnostics_text(&d)))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        serde_json::from_str(text)
            .map(PyStory::wrap)
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn to_json(&self) -> String {
        String::from_utf8(bundle::story_document(&self.inner)).expect("JSON is UTF-8")
    }

    /// Canonical `.story` text.
    fn serialize(&self) -> String {
        script::serialize(&self.inner)
    }

    #[getter]
    fn id(&self) -> &str {
        &self.inner.id
    }

    #[getter]
    fn title(&self) -> &str {
        &self.inner.title
    }

    fn element_ids(&self) -> Vec<String> {
        self.inner.element_ids().into_iter().map(str::to_owned).collect()
    }

    fn __eq__(&self, other: &Bound<'_, PyAny>) -> bool {
        other.cast::<PyStory>().is_ok_and(|o| o.get().inner == self.inner)
    }

    fn __repr__(&self) -> String {
        format!("Story(id={:?}, title={:?})", self.inner.id, self.inner.title)
    }
}

/// Full analysis report as a dict.
#[pyfunction]
#[pyo3(signature = (story, assets=None))]
fn analyze<'py>(py: Python<'py>, story: &PyStory, assets: Option<PathBuf>) -> PyResult<Bound<'py, PyAny>> {
    let s = &story.inner;
    let diags = match assets {
        Some(dir) => analyzer::validate_with_assets(s, &dir),
        None => analyzer::validate(s),
    };
    to_py(py, &analyzer::report_from(s, diags))
}

/// Choice paths as `{"paths": [[{"menu", "option"}, ...]], "truncated"}`.
#[pyfunction]
#[pyo3(signature = (story, max=10_000))]
fn choice_paths<'py>(py: Python<'py>, story: &PyStory, max: usize) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &analyzer::enumerate_choice_paths(&story.inner, max))
}

/// A live traversal of a story.
#[pyclass(name = "Session", module = "narralive")]
struct PySession {
    inner: runtime::Session,
}

#[pymethods]
impl PySession {
    #[new]
    fn new(story: &PyStory) -> PyResult<Self> {
        let (inner, _) = runtime::Session::start(Arc::clone(&story.inner)).map_err(runtime_err)?;
        Ok(PySession { inner })
    }

    #[getter]
    fn frame<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, self.inner.frame())
    }

    #[getter]
    fn finished(&self) -> bool {
        self.inner.is_finished()
    }

    /// Applies an event dict such as `{"type": "advance"}` and returns the
    /// new frame.
    fn apply<'py>(&mut self, py: Python<'py>, event: &Bound<'py, PyAny>) -> PyResult<Bound<'py, PyAny>> {
        let e: Event = from_py(event)?;
        let f = self.inner.apply(e).map_err(runtime_err)?;
        to_py(py, &f)
    }

    /// The event the default playthrough would send next, if any.
    fn greedy_event<'py>(&self, py: Python<'py>) -> PyResult<Option<Bound<'py, PyAny>>> {
        self.inner.greedy_event().map(|e| to_py(py, &e)).transpose()
    }

    fn answers<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.answers())
    }

    /// Transcript so far, as JSON Lines.
    fn transcript(&self) -> String {
        self.inner.transcript().to_jsonl()
    }
}

fn events_from(list: &Bound<'_, PyAny>) -> PyResult<Vec<Event>> {
    if let Ok(text) = list.extract::<String>() {
        return runtime::parse_events_jsonl(&text).map_err(|e| PyValueError::new_err(e.to_string()));
    }
    from_py(list)
}

/// Runs a list of event dicts (or JSON Lines text) and returns the
/// transcript as JSON Lines. Rejected events become error entries.
#[pyfunction]
fn simulate(story: &PyStory, events: &Bound<'_, PyAny>) -> PyResult<String> {
    let evs = events_from(events)?;
    runtime::simulate(Arc::clone(&story.inner), &evs)
        .map(|t| t.to_jsonl())
        .map_err(runtime_err)
}

/// Re-runs the events of a JSON Lines transcript.
#[pyfunction]
fn replay(story: &PyStory, transcript: &str) -> PyResult<String> {
    let t = Transcript::from_jsonl(transcript).map_err(|e| PyValueError::new_err(e.to_string()))?;
    runtime::replay(Arc::clone(&story.inner), &t)
        .map(|t| t.to_jsonl())
        .map_err(runtime_err)
}

/// Packages a story. `assets` is a directory path or a dict of path to
/// bytes. Returns the bundle bytes.
#[pyfunction]
#[pyo3(signature = (story, assets, version, erl=None, published_at=None))]
fn compile<'py>(
    py: Python<'py>,
    story: &PyStory,
    assets: &Bound<'py, PyAny>,
    version: u64,
    erl: Option<u8>,
    published_at: Option<String>,
) -> PyResult<Bound<'py, PyBytes>> {
    let mut opts = CompileOptions::new(version);
    opts.erl = erl;
    if let Some(ts) = published_at {
        opts.published_at = ts;
    }
    let b = if let Ok(d) = assets.cast::<PyDict>() {
        let map: BTreeMap<String, Vec<u8>> = d.extract()?;
        bundle::compile(&story.inner, &map, &opts)
    } else {
        let dir: PathBuf = assets.extract()?;
        bundle::compile(&story.inner, &dir, &opts)
    }
    .map_err(bundle_err)?;
    Ok(PyBytes::new(py, &b.bytes))
}

/// Integrity problems of a bundle; empty when intact.
#[pyfunction]
fn verify<'py>(py: Python<'py>, data: &[u8]) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &bundle::verify(data))
}

#[pyfunction]
fn read_manifest<'py>(py: Python<'py>, data: &[u8]) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &bundle::read_manifest(data).map_err(bundle_err)?)
}

/// Returns `(manifest, story)`.
#[pyfunction]
fn load<'py>(py: Python<'py>, data: &[u8]) -> PyResult<(Bound<'py, PyAny>, PyStory)> {
    let (m, s) = bundle::load(data).map_err(bundle_err)?;
    Ok((to_py(py, &m)?, PyStory::wrap(s)))
}

#[pyfunction]
fn get_asset<'py>(py: Python<'py>, data: &[u8], path: &str) -> PyResult<Option<Bound<'py, PyBytes>>> {
    Ok(bundle::get_asset(data, path)
        .map_err(bundle_err)?
        .map(|b| PyBytes::new(py, &b)))
}

/// `{"needed": bool, "warning"?: str}` for two manifest dicts.
#[pyfunction]
fn needs_update<'py>(
    py: Python<'py>,
    local: &Bound<'py, PyAny>,
    remote: &Bound<'py, PyAny>,
) -> PyResult<Bound<'py, PyAny>> {
    let l: bundle::BundleManifest = from_py(local)?;
    let r: bundle::BundleManifest = from_py(remote)?;
    to_py(py, &bundle::needs_update(&l, &r).map_err(bundle_err)?)
}

#[pyfunction]
fn qr_codes<'py>(py: Python<'py>, story: &PyStory) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &bundle::qr_codes(&story.inner))
}

#[pymodule]
pub fn narralive(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add_class::<PyStory>()?;
    m.add_class::<PySession>()?;
    for f in [
        wrap_pyfunction!(analyze, m)?,
        wrap_pyfunction!(choice_paths, m)?,
        wrap_pyfunction!(simulate, m)?,
        wrap_pyfunction!(replay, m)?,
        wrap_pyfunction!(compile, m)?,
        wrap_pyfunction!(verify, m)?,
        wrap_pyfunction!(read_manifest, m)?,
        wrap_pyfunction!(load, m)?,
        wrap_pyfunction!(get_asset, m)?,
        wrap_pyfunction!(needs_update, m)?,
        wrap_pyfunction!(qr_codes, m)?,
    ] {
        m.add_function(f)?;
    }
    m.add("NarraliveError", py.get_type::<NarraliveError>())?;
    m.add("ParseError", py.get_type::<ParseError>())?;
    m.add("InvalidStoryError", py.get_type::<InvalidStoryError>())?;
    m.add("BundleFormatError", py.get_type::<BundleFormatError>())?;
    m.add("EventNotApplicable", py.get_type::<EventNotApplicable>())?;
    m.add("NoMatch", py.get_type::<NoMatch>())?;
    m.add("SessionFinished", py.get_type::<SessionFinished>())?;
    Ok(())
}
