//! Python bindings for scenario runs and recovery-envelope searches.
//!
//! Simulations release the interpreter lock while they run.

use std::path::PathBuf;

use dcmpc::cli::ScenarioFile;
use dcmpc::simulator::{
    compare_controllers, max_recoverable_push, run, ControlMode, EnvelopeSearch, Outcome,
    PushEvent, SimLog,
};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_mode(mode: &str) -> PyResult<ControlMode> {
    mode.parse().map_err(value_error)
}

/// Round-trips a serializable value through `json.loads`.
fn to_python<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(value_error)?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Names of the four controller modes.
#[pyfunction]
fn modes() -> Vec<&'static str> {
    ControlMode::ALL.iter().map(|m| m.as_str()).collect()
}

#[pyclass(name = "Scenario", module = "pydcmpc", from_py_object)]
#[derive(Clone)]
struct PyScenario {
    inner: dcmpc::simulator::Scenario,
}

#[pymethods]
impl PyScenario {
    /// Loads and validates a scenario JSON file.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let origin = path.display().to_string();
        let (inner, _) = ScenarioFile::load(&path)
            .and_then(|f| f.resolve(&origin))
            .map_err(value_error)?;
        Ok(Self { inner })
    }

    /// Parses scenario JSON text.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let (inner, _) = ScenarioFile::parse(text, "<string>")
            .and_then(|f| f.resolve("<string>"))
            .map_err(value_error)?;
        Ok(Self { inner })
    }

    #[getter]
    fn name(&self) -> &str {
        &self.inner.name
    }

    #[getter]
    fn mode(&self) -> &'static str {
        ControlMode::of(&self.inner.mpc).as_str()
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.inner.dt
    }

    /// Pushes as `(force, start, duration)` tuples.
    #[getter]
    fn pushes(&self) -> Vec<([f64; 2], f64, f64)> {
        self.inner
            .pushes
            .iter()
            .map(|p| (p.force, p.start, p.duration))
            .collect()
    }

    fn with_mode(&self, mode: &str) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.with_mode(parse_mode(mode)?),
        })
    }

    /// Copy with the pushes replaced. Each push is `(force, start, duration)`.
    fn with_pushes(&self, pushes: Vec<([f64; 2], f64, f64)>) -> PyResult<Self> {
        let mut inner = self.inner.clone();
        inner.pushes = pushes
            .into_iter()
            .map(|(force, start, duration)| PushEvent {
                force,
                start,
                duration,
            })
            .collect();
        inner.validate().map_err(value_error)?;
        Ok(Self { inner })
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(name={:?}, mode={:?})",
            self.inner.name,
            self.mode()
        )
    }
}

/// Result of one closed-loop run.
#[pyclass(name = "RunResult", module = "pydcmpc")]
struct PyRunResult {
    log: SimLog,
}

#[pymethods]
impl PyRunResult {
    #[getter]
    fn completed(&self) -> bool {
        self.log.outcome.completed()
    }

    /// `None` when the walk completed, else `(t, reason)`.
    #[getter]
    fn fall(&self) -> Option<(f64, String)> {
        match &self.log.outcome {
            Outcome::Completed => None,
            Outcome::Fell { t, reason } => Some((*t, reason.to_string())),
        }
    }

    #[getter]
    fn ticks_solved(&self) -> usize {
        self.log.ticks.len()
    }

    #[getter]
    fn peak_hdot(&self) -> f64 {
        self.log.peak_hdot()
    }

    #[getter]
    fn max_dcm_error(&self) -> f64 {
        self.log.max_dcm_error()
    }

    #[getter]
    fn max_foothold_deviation(&self) -> f64 {
        self.log.max_foothold_deviation()
    }

    /// Executed foothold positions.
    #[getter]
    fn footholds(&self) -> Vec<[f64; 2]> {
        self.log.footholds.iter().map(|f| f.pos).collect()
    }

    /// Plant samples as a dict of equal-length lists.
    fn trajectory<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let s = &self.log.samples;
        let col =
            |f: &dyn Fn(&dcmpc::simulator::Sample) -> f64| s.iter().map(f).collect::<Vec<f64>>();
        let d = PyDict::new(py);
        d.set_item("t", col(&|x| x.t))?;
        d.set_item("x", col(&|x| x.com.x[0]))?;
        d.set_item("y", col(&|x| x.com.x[1]))?;
        d.set_item("z", col(&|x| x.com.z))?;
        d.set_item("xi_x", col(&|x| x.xi[0]))?;
        d.set_item("xi_y", col(&|x| x.xi[1]))?;
        d.set_item("cop_x", col(&|x| x.cop[0]))?;
        d.set_item("cop_y", col(&|x| x.cop[1]))?;
        d.set_item("cmp_x", col(&|x| x.cmp[0]))?;
        d.set_item("cmp_y", col(&|x| x.cmp[1]))?;
        d.set_item("Hdot_x", col(&|x| x.hdot[0]))?;
        d.set_item("Hdot_y", col(&|x| x.hdot[1]))?;
        d.set_item(
            "push_active",
            s.iter().map(|x| x.push_active).collect::<Vec<bool>>(),
        )?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        match self.fall() {
            None => format!("RunResult(completed, {} ticks)", self.log.ticks.len()),
            Some((t, why)) => format!("RunResult(fell at {t:.3} s: {why})"),
        }
    }
}

#[pyfunction]
#[pyo3(name = "run")]
fn run_scenario(py: Python<'_>, scenario: &PyScenario) -> PyResult<PyRunResult> {
    let s = scenario.inner.clone();
    let log = py.detach(move || run(&s)).map_err(value_error)?;
    Ok(PyRunResult { log })
}

fn search(
    direction: [f64; 2],
    duration: f64,
    tol: f64,
    start: Option<f64>,
    cap: f64,
) -> EnvelopeSearch {
    EnvelopeSearch {
        direction,
        duration,
        start,
        tolerance: tol,
        cap,
        ..EnvelopeSearch::default()
    }
}

/// Largest recoverable push along `direction`, as a dict.
#[pyfunction]
#[pyo3(signature = (scenario, direction, duration = 0.1, tol = 5.0, start = None, cap = 4000.0))]
fn envelope<'py>(
    py: Python<'py>,
    scenario: &PyScenario,
    direction: [f64; 2],
    duration: f64,
    tol: f64,
    start: Option<f64>,
    cap: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let s = scenario.inner.clone();
    let q = search(direction, duration, tol, start, cap);
    let env = py
        .detach(move || max_recoverable_push(&s, &q))
        .map_err(value_error)?;
    to_python(py, &env)
}

/// Runs and envelope searches per mode, one dict per mode.
#[pyfunction]
#[pyo3(signature = (scenario, modes, duration = 0.1, tol = 5.0))]
fn compare<'py>(
    py: Python<'py>,
    scenario: &PyScenario,
    modes: Vec<String>,
    duration: f64,
    tol: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let modes = modes
        .iter()
        .map(|m| parse_mode(m))
        .collect::<PyResult<Vec<_>>>()?;
    let s = scenario.inner.clone();
    let q = search(
        [1.0, 0.0],
        duration,
        tol,
        None,
        EnvelopeSearch::default().cap,
    );
    let rows = py
        .detach(move || compare_controllers(&s, &modes, &q))
        .map_err(value_error)?;
    to_python(py, &rows)
}

#[pymodule]
fn pydcmpc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScenario>()?;
    m.add_class::<PyRunResult>()?;
    m.add_function(wrap_pyfunction!(modes, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(envelope, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    Ok(())
}
