//! Python bindings for the `aoi-mimo` crate.

use aoi_mimo::asymptotic::{self, Population};
use aoi_mimo::monte_carlo::{self, AoiMode};
use aoi_mimo::{analytic_pep, sweep, Error, PepResult, RngSpec, SystemConfig};
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::Domain { .. } | Error::Invalid(_) | Error::Parse { .. } | Error::NonFinite(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyArithmeticError::new_err(e.to_string()),
    }
}

/// One operating point: users, antennas, attempt probability, power, noise
/// variance and spectral efficiency.
#[pyclass(name = "SystemConfig", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct PySystemConfig(SystemConfig);

#[pymethods]
impl PySystemConfig {
    #[new]
    #[pyo3(signature = (n_users, n_antennas, attempt_prob, tx_power, noise_var, spectral_eff))]
    fn new(n_users: u64, n_antennas: u64, attempt_prob: f64, tx_power: f64, noise_var: f64, spectral_eff: f64) -> PyResult<Self> {
        let c = SystemConfig { n_users, n_antennas, attempt_prob, tx_power, noise_var, spectral_eff };
        c.validate().map_err(|e| to_py(e.into()))?;
        Ok(PySystemConfig(c))
    }

    /// Parses key=value text.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        text.parse().map(PySystemConfig).map_err(to_py)
    }

    /// Copy with noise_var set from an SNR in dB.
    fn with_snr_db(&self, snr_db: f64) -> Self {
        PySystemConfig(self.0.with_snr_db(snr_db))
    }

    #[getter]
    fn n_users(&self) -> u64 {
        self.0.n_users
    }
    #[getter]
    fn n_antennas(&self) -> u64 {
        self.0.n_antennas
    }
    #[getter]
    fn attempt_prob(&self) -> f64 {
        self.0.attempt_prob
    }
    #[getter]
    fn tx_power(&self) -> f64 {
        self.0.tx_power
    }
    #[getter]
    fn noise_var(&self) -> f64 {
        self.0.noise_var
    }
    #[getter]
    fn spectral_eff(&self) -> f64 {
        self.0.spectral_eff
    }

    /// `(zeta, alpha_rho, beta)`; alpha_rho is `inf` at zero spectral efficiency.
    fn derive(&self) -> PyResult<(f64, f64, f64)> {
        let d = self.0.derive().map_err(to_py)?;
        Ok((d.zeta, d.alpha_rho.finite().unwrap_or(f64::INFINITY), d.beta))
    }

    fn __repr__(&self) -> String {
        let c = &self.0;
        format!(
            "SystemConfig(n_users={}, n_antennas={}, attempt_prob={}, tx_power={}, noise_var={}, spectral_eff={})",
            c.n_users, c.n_antennas, c.attempt_prob, c.tx_power, c.noise_var, c.spectral_eff
        )
    }
}

/// Error probability with its method tag.
#[pyclass(name = "PepResult", frozen, get_all, skip_from_py_object)]
struct PyPepResult {
    p_e: f64,
    method: String,
    ci_halfwidth: Option<f64>,
    truncation_bound: Option<f64>,
}

impl From<PepResult> for PyPepResult {
    fn from(r: PepResult) -> Self {
        PyPepResult {
            p_e: r.p_e,
            method: r.method.as_str().to_string(),
            ci_halfwidth: r.ci_halfwidth,
            truncation_bound: r.truncation_bound,
        }
    }
}

#[pymethods]
impl PyPepResult {
    fn __repr__(&self) -> String {
        format!("PepResult(p_e={:e}, method={:?})", self.p_e, self.method)
    }
}

#[pyfunction]
fn exact_pep(py: Python<'_>, config: &PySystemConfig) -> PyResult<PyPepResult> {
    let c = config.0;
    py.detach(|| analytic_pep::exact_pep(&c)).map(Into::into).map_err(to_py)
}

#[pyfunction]
fn asymptotic_pep(config: &PySystemConfig) -> PyResult<PyPepResult> {
    asymptotic::asymptotic_pep(&config.0).map(Into::into).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (config, trials, seed = 1))]
fn empirical_pep(py: Python<'_>, config: &PySystemConfig, trials: u64, seed: u64) -> PyResult<PyPepResult> {
    let c = config.0;
    py.detach(|| monte_carlo::empirical_pep(&c, trials, &RngSpec::new(seed, 0))).map(Into::into).map_err(to_py)
}

/// Large-system network AoI in slots (`inf` when unbounded).
#[pyfunction]
fn asymptotic_aoi(config: &PySystemConfig) -> PyResult<f64> {
    asymptotic::asymptotic_aoi(&config.0).map(|a| a.delta.value()).map_err(to_py)
}

/// Simulated network AoI. `gamma` selects the geometric model, otherwise
/// every slot is simulated at the physical layer.
#[pyfunction]
#[pyo3(signature = (config, horizon, seed = 1, gamma = None))]
fn simulate_aoi(py: Python<'_>, config: &PySystemConfig, horizon: u64, seed: u64, gamma: Option<f64>) -> PyResult<f64> {
    let c = config.0;
    let mode = gamma.map_or(AoiMode::Physical, AoiMode::Geometric);
    py.detach(|| monte_carlo::simulate_aoi(&c, horizon, &RngSpec::new(seed, 0), mode))
        .map(|a| a.delta.value())
        .map_err(to_py)
}

#[pyfunction]
fn q_func(x: f64) -> f64 {
    asymptotic::q_func(x)
}

#[pyfunction]
fn q_inv(p: f64) -> PyResult<f64> {
    asymptotic::q_inv(p).map_err(to_py)
}

#[pyfunction]
fn gamma_survival(shape: f64, scale: f64, x: f64) -> PyResult<f64> {
    analytic_pep::gamma_survival(shape, scale, x).map_err(to_py)
}

#[pyfunction]
fn age_limited_capacity(tau: f64, zeta: f64) -> PyResult<f64> {
    asymptotic::age_limited_capacity(tau, zeta).map_err(to_py)
}

#[pyfunction]
fn supremum_rho(eps: f64, n_users: u64, zeta: f64, tau: f64) -> PyResult<f64> {
    asymptotic::supremum_rho(eps, n_users, zeta, tau).map_err(to_py)
}

#[pyfunction]
fn rho_min(eps: f64, n_users: u64, zeta: f64) -> PyResult<f64> {
    asymptotic::rho_min(eps, n_users, zeta).map_err(to_py)
}

/// `(tau_eps, delta)` on the fixed-error curve; `n_users=None` is the
/// infinite population.
#[pyfunction]
#[pyo3(signature = (eps, rho, zeta, n_users = None))]
fn aoi_at_fixed_error(eps: f64, rho: f64, zeta: f64, n_users: Option<u64>) -> PyResult<(f64, f64)> {
    let pop = n_users.map_or(Population::Infinite, Population::Finite);
    asymptotic::aoi_at_fixed_error(eps, rho, zeta, pop).map(|p| (p.tau_eps, p.delta)).map_err(to_py)
}

/// CSV text of the fixed-error curves.
#[pyfunction]
#[pyo3(signature = (eps, zeta, n_list, rho_grid = None))]
fn aoi_curve_csv(eps: f64, zeta: f64, n_list: Vec<Option<u64>>, rho_grid: Option<Vec<f64>>) -> PyResult<String> {
    let pops: Vec<Population> = n_list.into_iter().map(|n| n.map_or(Population::Infinite, Population::Finite)).collect();
    sweep::cmd_aoi_curve(eps, zeta, &pops, rho_grid.as_deref()).map(|t| t.to_csv()).map_err(to_py)
}

#[pymodule]
fn aoi_mimo_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySystemConfig>()?;
    m.add_class::<PyPepResult>()?;
    m.add_function(wrap_pyfunction!(exact_pep, m)?)?;
    m.add_function(wrap_pyfunction!(asymptotic_pep, m)?)?;
    m.add_function(wrap_pyfunction!(empirical_pep, m)?)?;
    m.add_function(wrap_pyfunction!(asymptotic_aoi, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_aoi, m)?)?;
    m.add_function(wrap_pyfunction!(q_func, m)?)?;
    m.add_function(wrap_pyfunction!(q_inv, m)?)?;
    m.add_function(wrap_pyfunction!(gamma_survival, m)?)?;
    m.add_function(wrap_pyfunction!(age_limited_capacity, m)?)?;
    m.add_function(wrap_pyfunction!(supremum_rho, m)?)?;
    m.add_function(wrap_pyfunction!(rho_min, m)?)?;
    m.add_function(wrap_pyfunction!(aoi_at_fixed_error, m)?)?;
    m.add_function(wrap_pyfunction!(aoi_curve_csv, m)?)?;
    Ok(())
}
