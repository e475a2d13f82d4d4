//! Python bindings: `import deffuant`.
//!
//! Report-style results come back as plain dicts and lists.

// pyo3 0.22 macros expand to an identity `From` on `PyErr`.
#![allow(clippy::useless_conversion)]

use deffuant_core::analysis;
use deffuant_core::meanfield::{self, MeanfieldConfig};
use deffuant_core::rng::replica_rng;
use deffuant_core::{Boundary, Branch, Error, LatticeRun, OpinionLattice, RunOptions};
use pyo3::exceptions::{PyArithmeticError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::NonFinite { .. } => PyArithmeticError::new_err(e.to_string()),
        e if e.is_property_failure() => PyRuntimeError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<PyObject> {
    pythonize::pythonize(py, value)
        .map(|b| b.unbind())
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Model parameters `(theta, mu_minus, mu_plus)` with derived constants.
#[pyclass(name = "ModelParams", frozen)]
#[derive(Clone)]
struct PyModelParams(deffuant_core::ModelParams);

#[pymethods]
impl PyModelParams {
    #[new]
    #[pyo3(signature = (theta=1.0, mu_minus=0.5, mu_plus=0.25))]
    fn new(theta: f64, mu_minus: f64, mu_plus: f64) -> PyResult<Self> {
        deffuant_core::ModelParams::new(theta, mu_minus, mu_plus)
            .map(Self)
            .map_err(to_py_err)
    }

    #[getter]
    fn theta(&self) -> f64 {
        self.0.theta()
    }
    #[getter]
    fn mu_minus(&self) -> f64 {
        self.0.mu_minus()
    }
    #[getter]
    fn mu_plus(&self) -> f64 {
        self.0.mu_plus()
    }
    #[getter]
    fn rho_minus(&self) -> f64 {
        self.0.rho_minus()
    }
    #[getter]
    fn rho_plus(&self) -> f64 {
        self.0.rho_plus()
    }
    #[getter]
    fn d(&self) -> Option<f64> {
        self.0.d()
    }
    #[getter]
    fn k(&self) -> Option<u32> {
        self.0.k()
    }

    fn __repr__(&self) -> String {
        format!(
            "ModelParams(theta={}, mu_minus={}, mu_plus={})",
            self.0.theta(),
            self.0.mu_minus(),
            self.0.mu_plus()
        )
    }
}

/// One pairwise interaction: returns `(new_a, new_b, branch)`.
#[pyfunction]
fn interact(a: f64, b: f64, params: &PyModelParams) -> (f64, f64, &'static str) {
    let out = deffuant_core::interact(a, b, &params.0);
    let branch = match out.branch {
        Branch::Attraction => "attraction",
        Branch::Repulsion => "repulsion",
    };
    (out.new_left, out.new_right, branch)
}

/// A lattice simulation with trackers on the default origins.
#[pyclass(name = "Simulation")]
struct PySimulation(LatticeRun);

#[pymethods]
impl PySimulation {
    #[new]
    #[pyo3(signature = (params, sites=1000, seed=0, replica=0, boundary="ring", sample_interval=None))]
    fn new(
        params: &PyModelParams,
        sites: usize,
        seed: u64,
        replica: u64,
        boundary: &str,
        sample_interval: Option<f64>,
    ) -> PyResult<Self> {
        let boundary: Boundary = boundary.parse().map_err(to_py_err)?;
        let mut rng = replica_rng(seed, replica);
        let lattice = OpinionLattice::initial_config(sites, boundary, &mut rng).map_err(to_py_err)?;
        let origins = deffuant_core::simulation::default_origins(lattice.n_edges());
        let options = RunOptions {
            sample_interval,
            ..RunOptions::default()
        };
        LatticeRun::with_trackers(params.0, lattice, &origins, 16, rng, options)
            .map(Self)
            .map_err(to_py_err)
    }

    /// Advances to `t_end`, releasing the GIL while events run.
    fn run_until(&mut self, py: Python<'_>, t_end: f64) -> PyResult<()> {
        let run = &mut self.0;
        py.allow_threads(|| run.run_until(t_end)).map_err(to_py_err)
    }

    #[getter]
    fn time(&self) -> f64 {
        self.0.time()
    }
    #[getter]
    fn n_events(&self) -> u64 {
        self.0.n_events()
    }
    fn opinions(&self) -> Vec<f64> {
        self.0.lattice().opinions().to_vec()
    }
    fn gaps(&self) -> Vec<f64> {
        self.0.lattice().gaps().collect()
    }
    /// Rows `(t, max_gap, n_gaps_above_theta, mean_abs_opinion)`.
    fn series(&self) -> Vec<(f64, f64, usize, f64)> {
        self.0
            .series()
            .iter()
            .map(|r| (r.t, r.max_gap, r.n_gaps_above_theta, r.mean_abs_opinion))
            .collect()
    }
    #[pyo3(signature = (thresholds=vec![1e1, 1e2, 1e3, 1e4]))]
    fn divergence_stats(&self, py: Python<'_>, thresholds: Vec<f64>) -> PyResult<PyObject> {
        let tr = self.0.trackers().expect("built with trackers");
        to_py(py, &tr.divergence_stats(&thresholds))
    }
    fn checks(&self, py: Python<'_>) -> PyResult<PyObject> {
        to_py(py, self.0.checks())
    }
}

#[pyfunction]
fn phi(c: f64, params: &PyModelParams) -> PyResult<f64> {
    analysis::phi(c, &params.0).map_err(to_py_err)
}

#[pyfunction]
#[pyo3(signature = (params, tol=1e-9))]
fn find_c0(py: Python<'_>, params: &PyModelParams, tol: f64) -> PyResult<PyObject> {
    to_py(py, &analysis::find_c0(&params.0, tol).map_err(to_py_err)?)
}

#[pyfunction]
fn theorem_lower_bound(py: Python<'_>, params: &PyModelParams) -> PyResult<PyObject> {
    to_py(py, &analysis::theorem_lower_bound(&params.0).map_err(to_py_err)?)
}

#[pyfunction]
#[pyo3(signature = (params, interactions=None))]
fn forced_increase(py: Python<'_>, params: &PyModelParams, interactions: Option<u32>) -> PyResult<PyObject> {
    to_py(py, &analysis::forced_increase(&params.0, interactions).map_err(to_py_err)?)
}

#[pyfunction]
#[pyo3(signature = (params, x0_over_d=2.001, n_over_d=1000.0, replicas=10_000, seed=0))]
fn escape_probability(
    py: Python<'_>,
    params: &PyModelParams,
    x0_over_d: f64,
    n_over_d: f64,
    replicas: u64,
    seed: u64,
) -> PyResult<PyObject> {
    let p = params.0;
    let est = py
        .allow_threads(|| analysis::escape_probability_mc(&p, x0_over_d, n_over_d, replicas, seed))
        .map_err(to_py_err)?;
    to_py(py, &est)
}

#[pyfunction]
#[pyo3(signature = (params, horizon=50.0, n_points=50, replicas=10_000, seed=0))]
fn measure_log_drift(
    py: Python<'_>,
    params: &PyModelParams,
    horizon: f64,
    n_points: usize,
    replicas: u64,
    seed: u64,
) -> PyResult<PyObject> {
    let p = params.0;
    let est = py
        .allow_threads(|| analysis::measure_log_drift(&p, horizon, n_points, replicas, seed))
        .map_err(to_py_err)?;
    to_py(py, &est)
}

#[pyfunction]
#[pyo3(signature = (theta, mu_plus, c0_profile, epsilon, n_samples=1001))]
fn check_escalation_intervals(theta: f64, mu_plus: f64, c0_profile: f64, epsilon: f64, n_samples: usize) -> PyResult<bool> {
    meanfield::check_escalation_intervals(theta, mu_plus, c0_profile, epsilon, n_samples).map_err(to_py_err)
}

/// Mean-field run; the dict includes the final profile as `a` and `u` lists.
#[pyfunction]
#[pyo3(signature = (theta=1.0, mu_plus=0.25, half_width=8.0, da=0.02, dt=0.005, t_max=20.0, sample_interval=0.5, support_level=1e-6))]
#[allow(clippy::too_many_arguments)]
fn run_meanfield(
    py: Python<'_>,
    theta: f64,
    mu_plus: f64,
    half_width: f64,
    da: f64,
    dt: f64,
    t_max: f64,
    sample_interval: f64,
    support_level: f64,
) -> PyResult<PyObject> {
    let cfg = MeanfieldConfig {
        theta,
        mu_plus,
        half_width,
        da,
        dt,
        t_max,
        sample_interval,
        support_level,
    };
    let run = py.allow_threads(|| meanfield::run_meanfield(&cfg)).map_err(to_py_err)?;
    let dict = to_py(py, &run)?;
    let g = &run.final_grid;
    let a: Vec<f64> = (0..g.len()).map(|i| g.a(i)).collect();
    let bound = dict.bind(py);
    bound.set_item("a", a)?;
    bound.set_item("u", g.values().to_vec())?;
    Ok(dict)
}

#[pymodule]
fn deffuant(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModelParams>()?;
    m.add_class::<PySimulation>()?;
    m.add_function(wrap_pyfunction!(interact, m)?)?;
    m.add_function(wrap_pyfunction!(phi, m)?)?;
    m.add_function(wrap_pyfunction!(find_c0, m)?)?;
    m.add_function(wrap_pyfunction!(theorem_lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(forced_increase, m)?)?;
    m.add_function(wrap_pyfunction!(escape_probability, m)?)?;
    m.add_function(wrap_pyfunction!(measure_log_drift, m)?)?;
    m.add_function(wrap_pyfunction!(check_escalation_intervals, m)?)?;
    m.add_function(wrap_pyfunction!(run_meanfield, m)?)?;
    Ok(())
}
