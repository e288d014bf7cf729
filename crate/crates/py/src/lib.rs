//! Python bindings. Matrices cross the boundary as nested lists of complex
//! numbers, row-major.

use std::collections::HashMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use disentangle_core::bloch::{bloch_matrix, product_basis};
use disentangle_core::config::{Scenario, ScenarioConfig};
use disentangle_core::dynamics::{evolve as core_evolve, EvolveConfig, ThetaSpec};
use disentangle_core::hermitian::{self, CMatrix, CVector, C64};
use disentangle_core::maxent::{gibbs_state as core_gibbs, maxent_state, MaxEntProblem};
use disentangle_core::scenarios;
use disentangle_core::Error;

type Rows = Vec<Vec<C64>>;
type Checks = Vec<(String, f64, bool)>;

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::Dimension(_) | Error::Domain(_) | Error::Config(_) | Error::NonFinite => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn matrix_from_rows(rows: &Rows) -> PyResult<CMatrix> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("matrix must be a non-empty square list of rows"));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn rows_from_matrix(m: &CMatrix) -> Rows {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

/// Density matrix on a product of subsystems.
#[pyclass(name = "DensityMatrix", module = "disentangle", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyDensityMatrix {
    inner: hermitian::DensityMatrix,
}

#[pymethods]
impl PyDensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    #[new]
    #[pyo3(signature = (rows, dims=None))]
    fn new(rows: Rows, dims: Option<Vec<usize>>) -> PyResult<Self> {
        let m = matrix_from_rows(&rows)?;
        let dims = dims.unwrap_or_else(|| vec![m.nrows()]);
        let diag = hermitian::check_density(&m, &hermitian::DensityTolerances::default());
        if !diag.passed() {
            return Err(PyValueError::new_err(format!("not a density matrix: {diag:?}")));
        }
        let inner = hermitian::DensityMatrix::new(m, dims).map_err(to_py_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_pure(amplitudes: Vec<C64>, dims: Vec<usize>) -> PyResult<Self> {
        let psi = CVector::from_vec(amplitudes);
        let inner = hermitian::DensityMatrix::from_pure(&psi, dims).map_err(to_py_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn maximally_mixed(dims: Vec<usize>) -> PyResult<Self> {
        let inner = hermitian::DensityMatrix::maximally_mixed(dims).map_err(to_py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn dims(&self) -> Vec<usize> {
        self.inner.dims().to_vec()
    }

    fn matrix(&self) -> Rows {
        rows_from_matrix(self.inner.matrix())
    }

    fn purity(&self) -> f64 {
        hermitian::purity(&self.inner)
    }

    fn entropy(&self) -> PyResult<f64> {
        hermitian::entropy(&self.inner).map_err(to_py_err)
    }

    fn mutual_information(&self) -> PyResult<f64> {
        hermitian::mutual_information(&self.inner).map_err(to_py_err)
    }

    fn partial_trace(&self, keep: usize) -> PyResult<Self> {
        let inner = hermitian::partial_trace(&self.inner, keep).map_err(to_py_err)?;
        Ok(Self { inner })
    }

    /// Product of the two marginals.
    fn nz_project(&self) -> PyResult<Self> {
        let inner = hermitian::nz_project(&self.inner).map_err(to_py_err)?;
        Ok(Self { inner })
    }

    /// Bloch matrix `B[a][b]` in the normalized product basis.
    fn bloch(&self) -> PyResult<Vec<Vec<f64>>> {
        let (da, db) = bipartite_dims(&self.inner)?;
        let basis = product_basis(da, db).map_err(to_py_err)?;
        let b = bloch_matrix(&self.inner, &basis).map_err(to_py_err)?;
        Ok((0..b.data.nrows()).map(|i| b.data.row(i).iter().copied().collect()).collect())
    }

    fn __repr__(&self) -> String {
        format!("DensityMatrix(dims={:?})", self.inner.dims())
    }
}

fn bipartite_dims(rho: &hermitian::DensityMatrix) -> PyResult<(usize, usize)> {
    match rho.dims() {
        [a, b] => Ok((*a, *b)),
        d => Err(PyValueError::new_err(format!("need a bipartite state, got dims {d:?}"))),
    }
}

/// Integrates the nonlinear equation of motion and returns `(t, state)`
/// pairs every `record_every` steps.
///
/// `theta` is `"log_rho"`, `"free_energy"` (needs `beta`) or `"fixed"`
/// (needs `theta_op`).
#[pyfunction]
#[pyo3(signature = (rho, h, theta="log_rho", gamma=1.0, beta=None, theta_op=None, dt=1e-3, t_max=1.0, constrained=false, eps_init=1e-6, record_every=10))]
#[allow(clippy::too_many_arguments)]
fn evolve(
    py: Python<'_>,
    rho: &PyDensityMatrix,
    h: Rows,
    theta: &str,
    gamma: f64,
    beta: Option<f64>,
    theta_op: Option<Rows>,
    dt: f64,
    t_max: f64,
    constrained: bool,
    eps_init: f64,
    record_every: usize,
) -> PyResult<Vec<(f64, PyDensityMatrix)>> {
    let h = matrix_from_rows(&h)?;
    let spec = match (theta, beta, theta_op) {
        ("log_rho", _, _) => ThetaSpec::log_rho(gamma),
        ("free_energy", Some(beta), _) => ThetaSpec::free_energy(gamma, beta),
        ("fixed", _, Some(op)) => ThetaSpec::fixed(matrix_from_rows(&op)?),
        _ => return Err(PyValueError::new_err(format!("invalid theta specification {theta:?}"))),
    };
    let cfg = EvolveConfig {
        dt,
        t_max,
        constrained,
        eps_init,
        record_every,
        ..EvolveConfig::default()
    };
    let basis = match rho.inner.dims() {
        [a, b] => Some(product_basis(*a, *b).map_err(to_py_err)?),
        _ => None,
    };
    let rho0 = rho.inner.clone();
    let traj = py
        .detach(|| core_evolve(&rho0, &h, &spec, &cfg, basis.as_ref()))
        .map_err(to_py_err)?;
    Ok(traj
        .snapshots
        .into_iter()
        .map(|s| (s.t, PyDensityMatrix { inner: s.state }))
        .collect())
}

#[pyfunction]
fn gibbs_state(h: Rows, beta: f64) -> PyResult<PyDensityMatrix> {
    let inner = core_gibbs(&matrix_from_rows(&h)?, beta).map_err(to_py_err)?;
    Ok(PyDensityMatrix { inner })
}

/// Max-ent state matching the marginals of `rho`; returns the state and
/// the number of Newton iterations.
#[pyfunction]
fn maxent(rho: &PyDensityMatrix) -> PyResult<(PyDensityMatrix, usize)> {
    let (da, db) = bipartite_dims(&rho.inner)?;
    let basis = product_basis(da, db).map_err(to_py_err)?;
    let problem = MaxEntProblem::from_state(&rho.inner, basis).map_err(to_py_err)?;
    let sol = maxent_state(&problem).map_err(to_py_err)?;
    Ok((PyDensityMatrix { inner: sol.rho }, sol.iterations))
}

/// CHSH value for unit settings `[a, a', b, b']`.
#[pyfunction]
fn chsh(rho: &PyDensityMatrix, settings: [[f64; 3]; 4]) -> PyResult<f64> {
    scenarios::chsh_expectation(&rho.inner, &settings).map_err(to_py_err)
}

/// Runs a named scenario with `key=value` overrides; returns the rendered
/// CSV or JSON text and the `(name, value, passed)` checks.
#[pyfunction]
#[pyo3(signature = (name, overrides=None))]
fn run_scenario(
    py: Python<'_>,
    name: &str,
    overrides: Option<HashMap<String, String>>,
) -> PyResult<(String, Checks)> {
    let scenario: Scenario = name.parse().map_err(to_py_err)?;
    let mut cfg = ScenarioConfig::new(scenario);
    let mut keys: Vec<_> = overrides.unwrap_or_default().into_iter().collect();
    keys.sort();
    for (k, v) in &keys {
        cfg.set(k, v).map_err(to_py_err)?;
    }
    cfg.validate().map_err(to_py_err)?;
    let out = py.detach(|| scenarios::run(&cfg)).map_err(to_py_err)?;
    let checks = out.checks.into_iter().map(|c| (c.name, c.value, c.passed)).collect();
    Ok((out.text, checks))
}

#[pymodule]
fn disentangle(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDensityMatrix>()?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(gibbs_state, m)?)?;
    m.add_function(wrap_pyfunction!(maxent, m)?)?;
    m.add_function(wrap_pyfunction!(chsh, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    Ok(())
}
