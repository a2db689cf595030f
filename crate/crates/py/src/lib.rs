//! Python bindings. Structured results cross the boundary as plain dicts and
//! lists (via JSON), so they mirror the files the Rust side writes.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use autoboot_core::bootstrap;
use autoboot_core::metrics::{self, CostLine};
use autoboot_core::monitor::{self, VerifierConfig};
use autoboot_core::policy::{self, grasp_bounds, stack_bounds, Collector, PredictMode, Subtask};
use autoboot_core::store::{self, Dataset};
use autoboot_core::{rng, sim, Error};
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyAny;
use serde::de::DeserializeOwned;
use serde::Serialize;

pyo3::create_exception!(autoboot, AutobootError, PyException, "A runtime failure in the simulator or pipeline.");
pyo3::create_exception!(autoboot, ValidationError, PyValueError, "Invalid input, configuration or data.");

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Config(_)
        | Error::Validation { .. }
        | Error::Parse { .. }
        | Error::SchemaVersion { .. }
        | Error::Input(_)
        | Error::InsufficientData { .. }
        | Error::Precondition(_)
        | Error::Protocol { .. }
        | Error::Json(_) => ValidationError::new_err(e.to_string()),
        _ => AutobootError::new_err(e.to_string()),
    }
}

/// Convert through JSON to the equivalent Python object.
fn to_object<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| to_py(e.into()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn from_object<T: DeserializeOwned>(obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| ValidationError::new_err(e.to_string()))
}

fn parse_subtask(name: &str) -> PyResult<Subtask> {
    match name {
        "grasp" => Ok(Subtask::Grasp),
        "stack" => Ok(Subtask::Stack),
        _ => Err(ValidationError::new_err(format!("subtask must be 'grasp' or 'stack', got {name:?}"))),
    }
}

/// Run configuration. Unknown keys are rejected and cross-field constraints
/// are checked on construction.
#[pyclass(module = "autoboot")]
struct RunConfig {
    inner: store::RunConfig,
}

#[pymethods]
impl RunConfig {
    /// Parse a JSON document; all fields are optional.
    #[new]
    #[pyo3(signature = (json = None))]
    fn new(json: Option<&str>) -> PyResult<Self> {
        let inner = store::RunConfig::from_json(json.unwrap_or("{}")).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: store::load_config(&path).map_err(to_py)?,
        })
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn run_id(&self) -> String {
        self.inner.run_id()
    }

    /// The fully resolved configuration as JSON.
    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&self.inner.clone().resolved()).map_err(|e| to_py(e.into()))
    }

    fn __repr__(&self) -> String {
        format!("RunConfig(run_id={:?}, stages={})", self.inner.run_id(), self.inner.plan.len())
    }
}

fn config_or_default(config: Option<&RunConfig>) -> store::RunConfig {
    config.map_or_else(store::RunConfig::default, |c| c.inner.clone())
}

/// A fitted (or random, or composed) endpoint policy.
#[pyclass(module = "autoboot")]
struct PolicyModel {
    inner: policy::PolicyModel,
}

#[pymethods]
impl PolicyModel {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: policy::PolicyModel::load(&path).map_err(to_py)?,
        })
    }

    /// Fit a Gaussian-mixture policy to observation/action pairs. Actions are
    /// clipped to the workspace of `config`.
    #[staticmethod]
    #[pyo3(signature = (subtask, obs, act, k = 5, seed = 0, config = None))]
    fn fit(
        subtask: &str,
        obs: Vec<Vec<f64>>,
        act: Vec<Vec<f64>>,
        k: usize,
        seed: u64,
        config: Option<&RunConfig>,
    ) -> PyResult<Self> {
        if obs.len() != act.len() {
            return Err(ValidationError::new_err("obs and act must have the same length"));
        }
        let subtask = parse_subtask(subtask)?;
        let config = config_or_default(config);
        let bounds = match subtask {
            Subtask::Grasp => grasp_bounds(&config.workspace),
            _ => stack_bounds(&config.workspace),
        };
        let params = policy::GmmParams {
            k,
            seed,
            ..config.policy.params(seed)
        };
        let pairs: Vec<_> = obs.into_iter().zip(act).collect();
        let inner = policy::PolicyModel::fit(subtask, &pairs, bounds, &params).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Predicted action for `obs`: the conditional mean, or a draw from the
    /// conditional mixture when `sample` is true.
    #[pyo3(signature = (obs, sample = false, seed = 0))]
    fn predict(&self, obs: Vec<f64>, sample: bool, seed: u64) -> PyResult<Vec<f64>> {
        let mode = if sample { PredictMode::Sample } else { PredictMode::Mean };
        let mut r = rng::stream(seed);
        self.inner.predict(&obs, mode, &mut r).map_err(to_py)
    }

    /// EM fit diagnostics, or None for policies that were not fitted.
    fn fit_report<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_object(py, &self.inner.fit)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(to_py)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| to_py(e.into()))
    }

    #[getter]
    fn kind<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_object(py, &self.inner.kind)
    }

    fn __repr__(&self) -> String {
        format!("PolicyModel(kind={:?}, subtask={:?})", self.inner.kind, self.inner.subtask)
    }
}

/// Initial scene for `seed` under the workspace of `config`.
#[pyfunction]
#[pyo3(signature = (seed, config = None))]
fn init_scene<'py>(py: Python<'py>, seed: u64, config: Option<&RunConfig>) -> PyResult<Bound<'py, PyAny>> {
    let spec = config_or_default(config).workspace;
    to_object(py, &sim::init_scene(&spec, seed).map_err(to_py)?)
}

/// Episodes of a JSONL dataset file as dicts.
#[pyfunction]
fn read_dataset<'py>(py: Python<'py>, path: PathBuf) -> PyResult<Bound<'py, PyAny>> {
    to_object(py, &load_dataset(&path)?.episodes)
}

fn load_dataset(path: &Path) -> PyResult<Dataset> {
    store::read_dataset(path, &store::RunConfig::default().workspace).map_err(to_py)
}

/// Average pairwise L1 distance between points.
#[pyfunction]
fn l1_avg(points: Vec<[f64; 2]>) -> PyResult<f64> {
    metrics::l1_avg(&points).map_err(to_py)
}

/// Ids of the `k` prior episodes that best spread the new ones.
#[pyfunction]
fn select_balanced(prior: PathBuf, new: PathBuf, k: usize) -> PyResult<Vec<u64>> {
    let selected = bootstrap::select_balanced(&load_dataset(&prior)?, &load_dataset(&new)?, k).map_err(to_py)?;
    Ok(selected.ids())
}

/// Cost breakdown of `[{"category", "hours", "rate"}, ...]`; amounts are
/// decimal strings in dollars and cents.
#[pyfunction]
fn cost_report<'py>(py: Python<'py>, lines: &Bound<'py, PyAny>) -> PyResult<Bound<'py, PyAny>> {
    let lines: Vec<CostLine> = from_object(lines)?;
    to_object(py, &metrics::cost_report(&lines).map_err(to_py)?)
}

/// Run every stage of `config` under `<out>/runs/<run-id>/` and return the
/// run report.
#[pyfunction]
#[pyo3(signature = (config, out = None))]
fn run_bootstrap<'py>(py: Python<'py>, config: &RunConfig, out: Option<PathBuf>) -> PyResult<Bound<'py, PyAny>> {
    let root = bootstrap::output_root(out.as_deref());
    let inner = config.inner.clone();
    let report = py.detach(move || bootstrap::run_bootstrap(&inner, &root)).map_err(to_py)?;
    to_object(py, &report)
}

/// Write the CSV exports of a finished run and return their paths.
#[pyfunction]
fn export_reports(py: Python<'_>, run_dir: PathBuf) -> PyResult<Vec<PathBuf>> {
    py.detach(move || metrics::export_reports(&run_dir)).map_err(to_py)
}

/// Evaluate `policy` on `trials` fresh scenes.
#[pyfunction]
#[pyo3(signature = (policy, trials = 100, seed = 0, config = None))]
fn evaluate<'py>(
    py: Python<'py>,
    policy: &PolicyModel,
    trials: usize,
    seed: u64,
    config: Option<&RunConfig>,
) -> PyResult<Bound<'py, PyAny>> {
    let config = config_or_default(config);
    let collector = Collector::from_model(&policy.inner).map_err(to_py)?;
    let report = py
        .detach(move || policy::evaluate_policy(&collector, &config.environment(), &config.pipeline, trials, seed))
        .map_err(to_py)?;
    to_object(py, &report)
}

/// Re-run the monitoring services over a driver message log; raises if the
/// replayed outcomes differ from the logged ones.
#[pyfunction]
#[pyo3(signature = (log, config = None))]
fn replay<'py>(py: Python<'py>, log: PathBuf, config: Option<&RunConfig>) -> PyResult<Bound<'py, PyAny>> {
    let config = config_or_default(config);
    let verifier = VerifierConfig {
        confirm_frames: config.pipeline.confirm_frames,
        model: config.success_model.resolve(),
        cube_edge: config.workspace.cube_edge,
    };
    let file = File::open(&log).map_err(|e| to_py(e.into()))?;
    let report = monitor::replay_log(BufReader::new(file), verifier).map_err(to_py)?;
    to_object(py, &report)
}

#[pymodule]
pub fn autoboot(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("AutobootError", m.py().get_type::<AutobootError>())?;
    m.add("ValidationError", m.py().get_type::<ValidationError>())?;
    m.add_class::<RunConfig>()?;
    m.add_class::<PolicyModel>()?;
    m.add_function(wrap_pyfunction!(init_scene, m)?)?;
    m.add_function(wrap_pyfunction!(read_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(l1_avg, m)?)?;
    m.add_function(wrap_pyfunction!(select_balanced, m)?)?;
    m.add_function(wrap_pyfunction!(cost_report, m)?)?;
    m.add_function(wrap_pyfunction!(run_bootstrap, m)?)?;
    m.add_function(wrap_pyfunction!(export_reports, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(replay, m)?)?;
    Ok(())
}
