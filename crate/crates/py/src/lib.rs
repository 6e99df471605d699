//! Python bindings: configs, stepping a simulation, whole runs, and a few
//! standalone kernels (contact energy, edge-edge distance).

use std::path::PathBuf;

use nalgebra::Vector3;
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use rod_contact::config::SimConfig;
use rod_contact::driver::{run as run_sim, Simulation};
use rod_contact::geometry::closest_points;
use rod_contact::io::Metrics;
use rod_contact::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Config { .. } => PyValueError::new_err(e.to_string()),
        Error::Io(_) | Error::MissingForceLog(_) => PyIOError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Simulation settings. Defaults reproduce the two-flagella bundling case.
#[pyclass(name = "Config")]
struct PyConfig {
    inner: SimConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    fn new() -> Self {
        PyConfig {
            inner: SimConfig::default(),
        }
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        SimConfig::from_toml_str(text).map(|inner| PyConfig { inner }).map_err(to_py)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        SimConfig::load(&path).map(|inner| PyConfig { inner }).map_err(to_py)
    }

    fn to_toml(&self) -> String {
        self.inner.to_toml_string()
    }

    fn validate(&self) -> PyResult<()> {
        self.inner.validate().map_err(to_py)
    }

    fn num_steps(&self) -> usize {
        self.inner.num_steps()
    }

    #[getter]
    fn duration(&self) -> f64 {
        self.inner.output.duration
    }
    #[setter]
    fn set_duration(&mut self, v: f64) {
        self.inner.output.duration = v;
    }

    #[getter]
    fn stride(&self) -> usize {
        self.inner.output.stride
    }
    #[setter]
    fn set_stride(&mut self, v: usize) {
        self.inner.output.stride = v;
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.inner.solver.dt
    }
    #[setter]
    fn set_dt(&mut self, v: f64) {
        self.inner.solver.dt = v;
    }

    #[getter]
    fn mu(&self) -> f64 {
        self.inner.friction.mu
    }
    #[setter]
    fn set_mu(&mut self, v: f64) {
        self.inner.friction.mu = v;
    }

    #[getter]
    fn fluid_enabled(&self) -> bool {
        self.inner.fluid.enabled
    }
    #[setter]
    fn set_fluid_enabled(&mut self, v: bool) {
        self.inner.fluid.enabled = v;
    }

    #[getter]
    fn num_flagella(&self) -> usize {
        self.inner.scenario.num_flagella
    }
    #[setter]
    fn set_num_flagella(&mut self, v: usize) {
        self.inner.scenario.num_flagella = v;
    }

    #[getter]
    fn nodes_per_rod(&self) -> usize {
        self.inner.scenario.nodes_per_rod
    }
    #[setter]
    fn set_nodes_per_rod(&mut self, v: usize) {
        self.inner.scenario.nodes_per_rod = v;
    }

    #[getter]
    fn omega(&self) -> f64 {
        self.inner.scenario.omega
    }
    #[setter]
    fn set_omega(&mut self, v: f64) {
        self.inner.scenario.omega = v;
    }

    fn __repr__(&self) -> String {
        format!(
            "Config(num_flagella={}, omega={}, mu={}, dt={}, duration={})",
            self.inner.scenario.num_flagella, self.inner.scenario.omega, self.inner.friction.mu, self.inner.solver.dt, self.inner.output.duration
        )
    }
}

fn points(v: &[Vector3<f64>]) -> Vec<[f64; 3]> {
    v.iter().map(|x| [x.x, x.y, x.z]).collect()
}

/// A simulation advanced one step at a time.
#[pyclass(name = "Simulation")]
struct PySimulation {
    inner: Simulation,
}

#[pymethods]
impl PySimulation {
    #[new]
    fn new(config: &PyConfig) -> PyResult<Self> {
        Simulation::new(config.inner.clone()).map(|inner| PySimulation { inner }).map_err(to_py)
    }

    /// Advances one step and returns its statistics as a dict.
    fn step<'py>(&mut self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let s = self.inner.advance().map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("newton_iters", s.newton_iters)?;
        d.set_item("line_search_iters", s.line_search_iters)?;
        d.set_item("converged", s.converged)?;
        d.set_item("residual", s.residual)?;
        d.set_item("candidates", s.candidates)?;
        d.set_item("active_pairs", s.max_active_pairs)?;
        d.set_item("wall_time_s", s.wall_time_s)?;
        Ok(d)
    }

    #[getter]
    fn time(&self) -> f64 {
        self.inner.state.time
    }

    #[getter]
    fn step_index(&self) -> usize {
        self.inner.state.step_index
    }

    #[getter]
    fn num_rods(&self) -> usize {
        self.inner.state.rods.len()
    }

    #[getter]
    fn contact_stiffness(&self) -> f64 {
        self.inner.state.contact_stiffness
    }

    /// Node positions of one rod as a list of `[x, y, z]`.
    fn nodes(&self, rod: usize) -> PyResult<Vec<[f64; 3]>> {
        self.inner
            .state
            .rods
            .get(rod)
            .map(|r| points(&r.nodes))
            .ok_or_else(|| PyValueError::new_err(format!("no rod {rod}")))
    }

    fn twists(&self, rod: usize) -> PyResult<Vec<f64>> {
        self.inner
            .state
            .rods
            .get(rod)
            .map(|r| r.twists.clone())
            .ok_or_else(|| PyValueError::new_err(format!("no rod {rod}")))
    }

    fn distal_gap(&self) -> f64 {
        rod_contact::analysis::distal_gap(&self.inner.node_slices())
    }

    fn min_inter_rod_distance(&self) -> f64 {
        rod_contact::analysis::min_inter_rod_distance(&self.inner.node_slices())
    }
}

fn metrics_dict<'py>(py: Python<'py>, m: &Metrics) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("aipts", m.aipts)?;
    d.set_item("atpts_ms", m.atpts_ms)?;
    d.set_item("total_iters", m.total_iters)?;
    d.set_item("steps", m.steps)?;
    d.set_item("contact_steps", m.contact_steps)?;
    d.set_item("aipts_contact", m.aipts_contact)?;
    d.set_item("nonconverged_steps", m.nonconverged_steps)?;
    d.set_item("aborted", m.aborted)?;
    d.set_item("sim_end_s", m.sim_end_s)?;
    d.set_item("min_inter_rod_distance", m.min_inter_rod_distance)?;
    Ok(d)
}

/// Runs a whole simulation, optionally writing outputs to `out_dir`, and
/// returns the run metrics.
#[pyfunction]
#[pyo3(signature = (config, out_dir=None))]
fn run<'py>(py: Python<'py>, config: &PyConfig, out_dir: Option<PathBuf>) -> PyResult<Bound<'py, PyDict>> {
    let out = run_sim(&config.inner, out_dir.as_deref()).map_err(to_py)?;
    metrics_dict(py, &out.metrics)
}

/// Contact energy at scaled distance `dbar` for band width `delta_bar`.
#[pyfunction]
fn contact_energy(dbar: f64, delta_bar: f64) -> PyResult<f64> {
    rod_contact::contact::contact_energy(dbar, delta_bar).map_err(to_py)
}

/// Minimum distance between edges (a0, a1) and (b0, b1), with the closest
/// point parameters on each edge.
#[pyfunction]
fn edge_distance(a0: [f64; 3], a1: [f64; 3], b0: [f64; 3], b1: [f64; 3]) -> (f64, f64, f64) {
    let v = |p: [f64; 3]| Vector3::from(p);
    let r = closest_points(&[v(a0), v(a1), v(b0), v(b1)]);
    (r.distance, r.beta_i, r.beta_j)
}

#[pymodule]
fn rod_contact_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PySimulation>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(contact_energy, m)?)?;
    m.add_function(wrap_pyfunction!(edge_distance, m)?)?;
    Ok(())
}
