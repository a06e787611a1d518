//! Python bindings for the z2q core library.

use std::collections::BTreeMap;
use std::path::PathBuf;

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyOSError, PyValueError};
use pyo3::prelude::*;

use z2q_core::classical::{self, McmcParams};
use z2q_core::quantum::{self, Schedule};
use z2q_core::{
    ensemble, gauge_fix, Boundary, CoreError, Coupling, GaugeFixing, Method, SpinConfig, StartKind,
};

create_exception!(z2q, Z2qError, PyException);
create_exception!(z2q, CapExceededError, Z2qError);
create_exception!(z2q, FormatError, Z2qError);

fn to_py(e: CoreError) -> PyErr {
    match e {
        CoreError::Io(io) => PyOSError::new_err(io.to_string()),
        e @ CoreError::CapExceeded { .. } => CapExceededError::new_err(e.to_string()),
        e @ (CoreError::MalformedHeader(_)
        | CoreError::MalformedConfig { .. }
        | CoreError::ChecksumMismatch { .. }) => FormatError::new_err(e.to_string()),
        e @ (CoreError::InvalidLattice(_)
        | CoreError::InvalidParameter(_)
        | CoreError::LinkOutOfRange { .. }
        | CoreError::LengthMismatch { .. }
        | CoreError::TooFewSamples { .. }) => PyValueError::new_err(e.to_string()),
        e => Z2qError::new_err(e.to_string()),
    }
}

fn coupling(beta: Option<f64>) -> PyResult<Coupling> {
    match beta {
        None => Ok(Coupling::Infinite),
        Some(b) => Coupling::finite(b).map_err(to_py),
    }
}

fn parse<T: std::str::FromStr<Err = CoreError>>(s: &str) -> PyResult<T> {
    s.parse().map_err(to_py)
}

/// A hypercubic lattice together with its gauge fixing.
#[pyclass(name = "Lattice", module = "z2q", frozen)]
struct PyLattice {
    inner: z2q_core::Lattice,
    gf: GaugeFixing,
}

#[pymethods]
impl PyLattice {
    #[new]
    #[pyo3(signature = (dims, boundary = "open"))]
    fn new(dims: Vec<usize>, boundary: &str) -> PyResult<Self> {
        let inner = z2q_core::Lattice::new(&dims, parse::<Boundary>(boundary)?).map_err(to_py)?;
        let gf = gauge_fix(&inner);
        Ok(PyLattice { inner, gf })
    }

    /// The 2x2x2x2 open benchmark lattice.
    #[staticmethod]
    fn hypercube() -> PyResult<Self> {
        Self::new(vec![2; 4], "open")
    }

    #[getter]
    fn dims(&self) -> Vec<usize> {
        self.inner.dims().to_vec()
    }

    #[getter]
    fn boundary(&self) -> String {
        self.inner.boundary().to_string()
    }

    #[getter]
    fn n_sites(&self) -> usize {
        self.inner.n_sites()
    }

    #[getter]
    fn n_links(&self) -> usize {
        self.inner.n_links()
    }

    #[getter]
    fn n_plaquettes(&self) -> usize {
        self.inner.n_plaquettes()
    }

    /// Links of each plaquette, in boundary order.
    fn plaquettes(&self) -> Vec<[usize; 4]> {
        self.inner.plaquettes().iter().map(|p| p.links).collect()
    }

    /// Spanning-tree links held at +1.
    #[getter]
    fn fixed_links(&self) -> Vec<usize> {
        self.gf.fixed().to_vec()
    }

    /// Links carried by qubits, in qubit order.
    #[getter]
    fn free_links(&self) -> Vec<usize> {
        self.gf.free().to_vec()
    }

    #[getter]
    fn n_free(&self) -> usize {
        self.gf.n_free()
    }

    fn __repr__(&self) -> String {
        format!(
            "Lattice(dims={:?}, boundary='{}')",
            self.inner.dims(),
            self.inner.boundary()
        )
    }
}

#[pyclass(name = "StateVector", module = "z2q", frozen)]
struct PyStateVector {
    inner: z2q_core::StateVector,
}

#[pymethods]
impl PyStateVector {
    #[getter]
    fn n_qubits(&self) -> usize {
        self.inner.n_qubits()
    }

    fn norm(&self) -> f64 {
        self.inner.norm()
    }

    fn amplitudes(&self) -> Vec<Complex64> {
        self.inner.amplitudes().to_vec()
    }

    fn probabilities(&self) -> Vec<f64> {
        self.inner.probabilities()
    }

    /// `|<self|other>|^2`
    fn fidelity(&self, other: &PyStateVector) -> PyResult<f64> {
        if other.inner.n_qubits() != self.inner.n_qubits() {
            return Err(PyValueError::new_err("register sizes differ"));
        }
        Ok(self.inner.fidelity(&other.inner))
    }

    fn __len__(&self) -> usize {
        self.inner.amplitudes().len()
    }
}

#[pyclass(name = "Ensemble", module = "z2q", frozen)]
struct PyEnsemble {
    inner: z2q_core::Ensemble,
}

#[pymethods]
impl PyEnsemble {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyEnsemble {
            inner: ensemble::load(&path).map_err(to_py)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        ensemble::save(&self.inner, &path).map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.inner.meta().beta
    }

    #[getter]
    fn sampler(&self) -> String {
        self.inner.meta().sampler.to_string()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.meta().seed
    }

    #[getter]
    fn params(&self) -> BTreeMap<String, String> {
        self.inner.meta().params.clone()
    }

    /// Every configuration as a list of +1/-1 link values.
    fn configs(&self) -> Vec<Vec<i8>> {
        self.inner
            .configs()
            .iter()
            .map(|c| c.values().to_vec())
            .collect()
    }

    /// Mean plaquette per configuration.
    fn plaquette_series(&self) -> PyResult<Vec<f64>> {
        let lattice = self.inner.meta().lattice().map_err(to_py)?;
        self.inner
            .configs()
            .iter()
            .map(|c| classical::plaquette_average(c, &lattice).map_err(to_py))
            .collect()
    }

    /// `(mean, error)` of the plaquette. `method` is one of plain,
    /// jackknife, binned; the sampler's default when omitted.
    #[pyo3(signature = (method = None))]
    fn estimate_plaquette(&self, method: Option<&str>) -> PyResult<(f64, f64)> {
        let method = method.map(parse::<Method>).transpose()?;
        let lattice = self.inner.meta().lattice().map_err(to_py)?;
        let est = ensemble::estimate(
            &self.inner,
            |c| classical::plaquette_average(c, &lattice).unwrap_or(f64::NAN),
            method,
        )
        .map_err(to_py)?;
        Ok((est.mean, est.error))
    }
}

fn config(lattice: &PyLattice, values: Vec<i8>) -> PyResult<SpinConfig> {
    let c = SpinConfig::from_values(values).map_err(to_py)?;
    if c.len() != lattice.inner.n_links() {
        return Err(PyValueError::new_err(format!(
            "expected {} link values, got {}",
            lattice.inner.n_links(),
            c.len()
        )));
    }
    Ok(c)
}

/// Exact `<P>` by enumerating every gauge-fixed configuration.
#[pyfunction]
fn exact_plaquette(py: Python<'_>, lattice: &PyLattice, beta: f64) -> PyResult<f64> {
    py.detach(|| classical::exact_plaquette(&lattice.inner, &lattice.gf, beta))
        .map_err(to_py)
}

#[pyfunction]
fn action(lattice: &PyLattice, config_values: Vec<i8>, beta: f64) -> PyResult<f64> {
    classical::action(&config(lattice, config_values)?, &lattice.inner, beta).map_err(to_py)
}

#[pyfunction]
fn plaquette_average(lattice: &PyLattice, config_values: Vec<i8>) -> PyResult<f64> {
    classical::plaquette_average(&config(lattice, config_values)?, &lattice.inner).map_err(to_py)
}

/// Exact ground state of the parent Hamiltonian; `beta=None` is the
/// infinite-coupling limit.
#[pyfunction]
#[pyo3(signature = (lattice, beta = None))]
fn ground_state(py: Python<'_>, lattice: &PyLattice, beta: Option<f64>) -> PyResult<PyStateVector> {
    let beta = coupling(beta)?;
    let inner = py
        .detach(|| quantum::ground_state_reference(&lattice.inner, &lattice.gf, beta))
        .map_err(to_py)?;
    Ok(PyStateVector { inner })
}

/// Trotterized adiabatic evolution from a hot or cold start.
#[pyfunction]
#[pyo3(signature = (lattice, beta, total_time, dt = 0.2, start = "hot"))]
fn adiabatic_evolve(
    py: Python<'_>,
    lattice: &PyLattice,
    beta: f64,
    total_time: f64,
    dt: f64,
    start: &str,
) -> PyResult<PyStateVector> {
    let schedule =
        Schedule::new(parse::<StartKind>(start)?, beta, total_time, dt).map_err(to_py)?;
    let inner = py
        .detach(|| quantum::adiabatic_evolve(&lattice.inner, &lattice.gf, &schedule))
        .map_err(to_py)?;
    Ok(PyStateVector { inner })
}

#[pyfunction]
fn expectation_plaquette(lattice: &PyLattice, state: &PyStateVector) -> PyResult<f64> {
    quantum::expectation_plaquette(&state.inner, &lattice.inner, &lattice.gf).map_err(to_py)
}

/// Measure `shots` times in the computational basis.
#[pyfunction]
#[pyo3(signature = (lattice, state, beta, shots, seed = 0))]
fn sample(
    py: Python<'_>,
    lattice: &PyLattice,
    state: &PyStateVector,
    beta: f64,
    shots: usize,
    seed: u64,
) -> PyResult<PyEnsemble> {
    let inner = py
        .detach(|| {
            quantum::sample_configs(&state.inner, &lattice.inner, &lattice.gf, beta, shots, seed)
        })
        .map_err(to_py)?;
    Ok(PyEnsemble { inner })
}

/// Glauber Markov chain from the all-ones start.
#[pyfunction]
#[pyo3(signature = (lattice, beta, n_configs = 1000, n_therm = 100, stride = 10, seed = 0))]
fn mcmc(
    py: Python<'_>,
    lattice: &PyLattice,
    beta: f64,
    n_configs: usize,
    n_therm: usize,
    stride: usize,
    seed: u64,
) -> PyResult<PyEnsemble> {
    let params = McmcParams {
        n_therm,
        n_configs,
        stride,
    };
    let inner = py
        .detach(|| classical::mcmc_run(&lattice.inner, &lattice.gf, beta, params, seed))
        .map_err(to_py)?;
    Ok(PyEnsemble { inner })
}

#[pymodule]
fn z2q(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("Z2qError", m.py().get_type::<Z2qError>())?;
    m.add("CapExceededError", m.py().get_type::<CapExceededError>())?;
    m.add("FormatError", m.py().get_type::<FormatError>())?;
    m.add_class::<PyLattice>()?;
    m.add_class::<PyStateVector>()?;
    m.add_class::<PyEnsemble>()?;
    m.add_function(wrap_pyfunction!(exact_plaquette, m)?)?;
    m.add_function(wrap_pyfunction!(action, m)?)?;
    m.add_function(wrap_pyfunction!(plaquette_average, m)?)?;
    m.add_function(wrap_pyfunction!(ground_state, m)?)?;
    m.add_function(wrap_pyfunction!(adiabatic_evolve, m)?)?;
    m.add_function(wrap_pyfunction!(expectation_plaquette, m)?)?;
    m.add_function(wrap_pyfunction!(sample, m)?)?;
    m.add_function(wrap_pyfunction!(mcmc, m)?)?;
    Ok(())
}
