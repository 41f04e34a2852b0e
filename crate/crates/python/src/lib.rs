//! Python bindings: Bell-diagonal states and their correlations, pulse
//! schedules, filter-function decay, scenario runs and tomography.
//!
//! Density matrices cross the boundary as 4×4 nested lists of `complex`;
//! schedules and scenarios as JSON text or plain dicts.

use std::fmt::Display;

use frozen_discord::channels::{dephase_bd, DephasingRates};
use frozen_discord::correlations as corr;
use frozen_discord::ddseq::{self, DslBindings, PulseSchedule};
use frozen_discord::engine::QubitNoise;
use frozen_discord::harness::{self, Scenario};
use frozen_discord::qstate::{self, ComplexMatrix4, DensityMatrix};
use frozen_discord::tomography;
use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

type Matrix = Vec<Vec<Complex64>>;

fn value_err(e: impl Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_matrix(rows: &Matrix) -> PyResult<ComplexMatrix4> {
    if rows.len() != 4 || rows.iter().any(|r| r.len() != 4) {
        return Err(PyValueError::new_err("density matrix must be 4×4"));
    }
    let mut m = ComplexMatrix4::default();
    for (i, row) in rows.iter().enumerate() {
        m.0[i].copy_from_slice(row);
    }
    Ok(m)
}

fn to_density(rows: &Matrix) -> PyResult<DensityMatrix> {
    DensityMatrix::new(to_matrix(rows)?).map_err(value_err)
}

fn from_matrix(m: &ComplexMatrix4) -> Matrix {
    m.0.iter().map(|r| r.to_vec()).collect()
}

fn json_to_py<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

fn py_to_json(py: Python<'_>, obj: &Bound<'_, PyAny>) -> PyResult<String> {
    if let Ok(s) = obj.extract::<String>() {
        return Ok(s);
    }
    py.import("json")?.call_method1("dumps", (obj,))?.extract()
}

/// Correlation coefficients `(c1, c2, c3)` of a Bell-diagonal state.
#[pyclass(name = "BDParams", module = "frozen_discord_py", from_py_object)]
#[derive(Clone, Copy)]
struct PyBDParams {
    inner: qstate::BDParams,
}

#[pymethods]
impl PyBDParams {
    #[new]
    fn new(c1: f64, c2: f64, c3: f64) -> Self {
        PyBDParams {
            inner: qstate::BDParams::new(c1, c2, c3),
        }
    }

    #[staticmethod]
    fn of(matrix: Matrix) -> PyResult<Self> {
        Ok(PyBDParams {
            inner: qstate::bd_params_of(to_matrix(&matrix)?),
        })
    }

    #[getter]
    fn c1(&self) -> f64 {
        self.inner.c1
    }

    #[getter]
    fn c2(&self) -> f64 {
        self.inner.c2
    }

    #[getter]
    fn c3(&self) -> f64 {
        self.inner.c3
    }

    fn is_physical(&self) -> bool {
        self.inner.is_physical()
    }

    /// Populations on |Φ+⟩, |Ψ+⟩, |Φ−⟩, |Ψ−⟩.
    fn bell_eigenvalues(&self) -> [f64; 4] {
        self.inner.bell_eigenvalues()
    }

    fn state(&self) -> PyResult<Matrix> {
        let rho = qstate::bd_state(self.inner).map_err(value_err)?;
        Ok(from_matrix(rho.matrix()))
    }

    /// Dict with `classical`, `discord`, `total`, `chi` and `clamped`.
    fn correlations<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let r = corr::correlations(&self.inner);
        let d = PyDict::new(py);
        d.set_item("classical", r.triple.classical)?;
        d.set_item("discord", r.triple.discord)?;
        d.set_item("total", r.triple.total)?;
        d.set_item("chi", r.chi.0)?;
        d.set_item("clamped", r.clamped)?;
        Ok(d)
    }

    /// Coefficients after local phase damping for time `t`.
    fn dephase(&self, gamma_h: f64, gamma_c: f64, t: f64) -> PyResult<Self> {
        let rates = DephasingRates::new(gamma_h, gamma_c).map_err(value_err)?;
        Ok(PyBDParams {
            inner: dephase_bd(self.inner, &rates, t),
        })
    }

    /// Time at which `|c1|` decays to `|c3|` with mean rate `gamma`.
    fn transition_time(&self, gamma: f64) -> PyResult<f64> {
        frozen_discord::channels::transition_time(self.inner, gamma).map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!("BDParams({}, {}, {})", self.inner.c1, self.inner.c2, self.inner.c3)
    }
}

/// Discord minimized numerically over measurement directions on qubit B.
#[pyfunction]
#[pyo3(signature = (matrix, grid = corr::DEFAULT_GRID))]
fn discord_bruteforce(matrix: Matrix, grid: usize) -> PyResult<f64> {
    corr::discord_bruteforce(&to_density(&matrix)?, grid).map_err(value_err)
}

#[pyfunction]
fn fidelity(rho: Matrix, sigma: Matrix) -> PyResult<f64> {
    qstate::fidelity(&to_density(&rho)?, &to_density(&sigma)?).map_err(value_err)
}

/// Names of the built-in sequences.
#[pyfunction]
fn sequence_names() -> Vec<&'static str> {
    ddseq::SequenceKind::ALL.iter().map(|k| k.name()).collect()
}

/// JSON schedule of a built-in sequence with delay `tau`; the experimental
/// delay is used when `tau` is omitted.
#[pyfunction]
#[pyo3(signature = (name, tau = None))]
fn builtin_sequence(name: &str, tau: Option<f64>) -> PyResult<String> {
    let kind: ddseq::SequenceKind = name.parse().map_err(value_err)?;
    let s = ddseq::builtin_sequence(kind, tau.unwrap_or_else(|| kind.experimental_tau())).map_err(value_err)?;
    s.to_json().map_err(value_err)
}

/// Compiles schedule text to JSON.
#[pyfunction]
#[pyo3(signature = (text, tau = None, repetitions = None))]
fn compile_dsl(text: &str, tau: Option<f64>, repetitions: Option<u32>) -> PyResult<String> {
    let s = ddseq::compile_dsl(text, &DslBindings { tau, repetitions }).map_err(value_err)?;
    s.to_json().map_err(value_err)
}

/// Cycle time of a JSON schedule with the chloroform pulse errors.
#[pyfunction]
fn cycle_time(schedule: &str) -> PyResult<f64> {
    let s = PulseSchedule::from_json(schedule).map_err(value_err)?;
    Ok(ddseq::schedule_timing(&s, &ddseq::PulseErrorModel::chloroform()))
}

fn qubit_noise(gamma: Option<f64>, sigma: Option<f64>, tau_c: Option<f64>) -> PyResult<QubitNoise> {
    match (gamma, sigma, tau_c) {
        (Some(gamma), None, None) => Ok(QubitNoise::White { gamma }),
        (None, Some(sigma), Some(tau_c)) => Ok(QubitNoise::OrnsteinUhlenbeck { sigma, tau_c }),
        _ => Err(PyValueError::new_err("give either gamma, or sigma and tau_c")),
    }
}

/// Decay exponent χ(t) of one qubit's coherence under a JSON schedule.
#[pyfunction]
#[pyo3(signature = (schedule, t, *, gamma = None, sigma = None, tau_c = None))]
fn filter_decay_exponent(
    schedule: &str,
    t: f64,
    gamma: Option<f64>,
    sigma: Option<f64>,
    tau_c: Option<f64>,
) -> PyResult<f64> {
    let s = PulseSchedule::from_json(schedule).map_err(value_err)?;
    Ok(ddseq::filter_decay_exponent(&s, &qubit_noise(gamma, sigma, tau_c)?, t))
}

/// Runs a scenario given as a dict or JSON text and returns a dict with
/// the trajectory rows `[t, c1, c2, c3, C, D, I]`, the transition and
/// the checkpoints.
#[pyfunction]
fn run_scenario<'py>(py: Python<'py>, scenario: &Bound<'py, PyAny>) -> PyResult<Bound<'py, PyDict>> {
    let s = Scenario::from_json(&py_to_json(py, scenario)?).map_err(value_err)?;
    let r = py.detach(|| harness::run_scenario(&s)).map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("label", &r.label)?;
    d.set_item("engine", r.engine.name())?;
    d.set_item("sequence", &r.sequence)?;
    let rows: Vec<[f64; 7]> = r
        .points
        .iter()
        .map(|p| {
            [
                p.t,
                p.params.c1,
                p.params.c2,
                p.params.c3,
                p.triple.classical,
                p.triple.discord,
                p.triple.total,
            ]
        })
        .collect();
    d.set_item("points", PyList::new(py, rows)?)?;
    let transition = r.transition.map(|t| (t.t_bar, t.censored));
    d.set_item("t_bar", transition.map(|t| t.0))?;
    d.set_item("censored", transition.is_some_and(|t| t.1))?;
    d.set_item("final_fidelity", r.final_fidelity)?;
    d.set_item("checkpoints", r.checkpoints.clone())?;
    d.set_item("stderr", r.stderr.clone())?;
    Ok(d)
}

/// Calibrated Ornstein-Uhlenbeck noise (as a dict) that reproduces the
/// white-noise transition time for correlation time `tau_c`.
#[pyfunction]
fn calibrate_ou<'py>(
    py: Python<'py>,
    c0: PyBDParams,
    gamma_h: f64,
    gamma_c: f64,
    tau_c: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let noise = harness::calibrate_ou(c0.inner, [gamma_h, gamma_c], tau_c).map_err(value_err)?;
    json_to_py(py, &serde_json::to_string(&noise).map_err(value_err)?)
}

/// Simulated Pauli tomography of `matrix` with `shots` per operator.
#[pyfunction]
#[pyo3(signature = (matrix, shots = 100_000, seed = 0))]
fn reconstruct<'py>(py: Python<'py>, matrix: Matrix, shots: u64, seed: u64) -> PyResult<Bound<'py, PyDict>> {
    let rho = to_density(&matrix)?;
    let r = py
        .detach(|| tomography::reconstruct(&rho, shots, seed))
        .map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("state", from_matrix(r.state.matrix()))?;
    d.set_item("linear", from_matrix(&r.linear))?;
    d.set_item("fidelity", r.fidelity)?;
    d.set_item("linear_min_eigenvalue", r.linear_min_eigenvalue)?;
    let expectations: Vec<(String, f64)> = r
        .record
        .entries
        .iter()
        .map(|e| (format!("{}{}", e.pauli_1, e.pauli_2), e.expectation))
        .collect();
    d.set_item("expectations", expectations)?;
    Ok(d)
}

#[pymodule]
fn frozen_discord_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBDParams>()?;
    m.add_function(wrap_pyfunction!(discord_bruteforce, m)?)?;
    m.add_function(wrap_pyfunction!(fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(sequence_names, m)?)?;
    m.add_function(wrap_pyfunction!(builtin_sequence, m)?)?;
    m.add_function(wrap_pyfunction!(compile_dsl, m)?)?;
    m.add_function(wrap_pyfunction!(cycle_time, m)?)?;
    m.add_function(wrap_pyfunction!(filter_decay_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate_ou, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruct, m)?)?;
    Ok(())
}
