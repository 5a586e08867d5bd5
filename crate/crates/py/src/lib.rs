//! Python bindings: domains, fields, noise realizations, solves and the experiment harness.

use std::path::PathBuf;
use std::sync::Arc;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use scbf_core::analysis::{
    check_apriori_bound, check_chi_independence, check_cocycle, check_energy_equality, compute_kappa,
    KappaSettings, NormSeries,
};
use scbf_core::harness::{execute, verify_run, write_run, Experiment, ExperimentConfig, REFERENCE_CONFIG};
use scbf_core::noise::{ou_path, ColoringSpectrum, Omega, WienerPath};
use scbf_core::solver::{cocycle_phi, pullback_solve, solve_transformed, SolverConfig, Trajectory as CoreTrajectory};
use scbf_core::spectral::{
    h_norm, lp_norm, random_field, shear_field, v_norm, Domain as CoreDomain, DomainSpec, PhysicalParams,
    SpectralField,
};
use scbf_core::Error;

fn err(e: Error) -> PyErr {
    if e.is_validation() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn json_err(e: serde_json::Error) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// Coefficients `(μ, α, β, r, χ)`.
#[pyclass(name = "Params", frozen, from_py_object)]
#[derive(Clone)]
struct Params {
    inner: PhysicalParams,
}

#[pymethods]
impl Params {
    #[new]
    #[pyo3(signature = (mu, alpha, beta, r, chi = 0.0))]
    fn new(mu: f64, alpha: f64, beta: f64, r: f64, chi: f64) -> PyResult<Self> {
        let inner = PhysicalParams { mu, alpha, beta, r, chi };
        inner.validate().map_err(err)?;
        Ok(Self { inner })
    }

    /// Regime name for `dim`; inadmissible combinations raise `ValueError`.
    fn regime(&self, dim: usize) -> PyResult<String> {
        let r = self.inner.regime(dim).map_err(err)?;
        Ok(serde_json::to_value(r).map_err(json_err)?.as_str().unwrap_or_default().to_string())
    }

    #[getter]
    fn mu(&self) -> f64 {
        self.inner.mu
    }
    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }
    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta
    }
    #[getter]
    fn r(&self) -> f64 {
        self.inner.r
    }
    #[getter]
    fn chi(&self) -> f64 {
        self.inner.chi
    }

    fn __repr__(&self) -> String {
        let p = self.inner;
        format!("Params(mu={}, alpha={}, beta={}, r={}, chi={})", p.mu, p.alpha, p.beta, p.r, p.chi)
    }
}

/// Periodic box of side `2π` with `grid_n` points per axis.
#[pyclass(frozen, from_py_object)]
#[derive(Clone)]
struct Domain {
    inner: Arc<CoreDomain>,
}

#[pymethods]
impl Domain {
    #[new]
    fn new(dim: usize, grid_n: usize) -> PyResult<Self> {
        Ok(Self { inner: CoreDomain::new(DomainSpec::cube(dim, grid_n)).map_err(err)? })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    #[getter]
    fn grid_n(&self) -> usize {
        self.inner.grid_n()
    }
    #[getter]
    fn lambda1(&self) -> f64 {
        self.inner.lambda1()
    }
}

/// Divergence-free, mean-zero, dealiased velocity field.
#[pyclass(frozen, from_py_object)]
#[derive(Clone)]
struct Field {
    inner: SpectralField,
}

#[pymethods]
impl Field {
    #[staticmethod]
    fn zeros(domain: &Domain) -> Self {
        Self { inner: SpectralField::zeros(domain.inner.clone()) }
    }

    /// Seeded random field with `‖u‖_H = norm`.
    #[staticmethod]
    fn random(domain: &Domain, seed: u64, norm: f64) -> Self {
        Self { inner: random_field(&domain.inner, seed, norm) }
    }

    /// `(amp·sin(m·y), 0[, 0])`.
    #[staticmethod]
    fn shear(domain: &Domain, mode: i64, amp: f64) -> Self {
        Self { inner: shear_field(&domain.inner, mode, amp) }
    }

    fn h_norm(&self) -> f64 {
        h_norm(&self.inner)
    }
    fn v_norm(&self) -> f64 {
        v_norm(&self.inner)
    }
    fn lp_norm(&self, p: f64) -> f64 {
        lp_norm(&self.inner, p)
    }
    fn inner_product(&self, other: &Field) -> f64 {
        self.inner.inner(&other.inner)
    }
    fn scaled(&self, a: f64) -> Self {
        Self { inner: self.inner.scaled(a) }
    }
    fn __add__(&self, other: &Field) -> Self {
        Self { inner: &self.inner + &other.inner }
    }
    fn __sub__(&self, other: &Field) -> Self {
        Self { inner: &self.inner - &other.inner }
    }
    /// Grid values, component-major, row-major within a component.
    fn physical_values(&self) -> Vec<f64> {
        self.inner.to_physical().values().to_vec()
    }
    fn max_divergence_ratio(&self) -> f64 {
        self.inner.max_divergence_ratio()
    }
}

/// One realization `ω` of the colored Wiener process.
#[pyclass(frozen, from_py_object)]
#[derive(Clone)]
struct Noise {
    inner: Omega,
}

#[pymethods]
impl Noise {
    #[new]
    #[pyo3(signature = (domain, seed, dt, base_amp = 0.5, delta = 0.25, s = 1.0, history = 64.0))]
    fn new(domain: &Domain, seed: u64, dt: f64, base_amp: f64, delta: f64, s: f64, history: f64) -> PyResult<Self> {
        let sp = ColoringSpectrum::build(&domain.inner, delta, base_amp, s).map_err(err)?;
        let w = WienerPath::new(seed, dt).map_err(err)?.with_anchor_time(-history);
        Ok(Self { inner: Omega::new(Arc::new(sp), w) })
    }

    /// `θ_s ω`.
    fn shift(&self, s: f64) -> PyResult<Self> {
        Ok(Self { inner: self.inner.shift(s).map_err(err)? })
    }

    /// `Υ(ω)(t)` for the given `(μ, χ)`.
    fn upsilon(&self, params: &Params, t: f64) -> PyResult<Field> {
        let path = ou_path(&self.inner, &params.inner, t, t).map_err(err)?;
        Ok(Field { inner: path.state(0) })
    }

    /// Absorbing radii `κ₁…κ₆, κ₁₁, κ₁₂, κ₁₃` at `θ_{-shift} ω`, keyed by name.
    #[pyo3(signature = (params, shift = 0.0, f_vprime_sq = 0.0))]
    fn kappa(&self, params: &Params, shift: f64, f_vprime_sq: f64) -> PyResult<Vec<(String, f64)>> {
        let set = KappaSettings::auto(params.inner.alpha);
        let h = self.inner.wiener.dt();
        let t_lo = -((shift + set.horizon + h) / h).ceil() * h;
        let series = NormSeries::build(&self.inner, &params.inner, t_lo, 1).map_err(err)?;
        let row = compute_kappa(&series, &params.inner, f_vprime_sq, shift, &set).map_err(err)?;
        Ok(scbf_core::analysis::KappaRow::NAMES.iter().map(|n| n.to_string()).zip(row.values()).collect())
    }
}

fn solver(params: &Params, dt: f64, store_every: usize) -> SolverConfig {
    SolverConfig::new(params.inner, dt).with_store_every(store_every)
}

/// Stored states and energy ledger of one solve.
#[pyclass(frozen)]
struct Trajectory {
    inner: CoreTrajectory,
}

#[pymethods]
impl Trajectory {
    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.times.clone()
    }
    /// `u = v + Υ` at stored index `i`.
    fn u(&self, i: usize) -> PyResult<Field> {
        if i >= self.inner.times.len() {
            return Err(PyValueError::new_err(format!("index {i} out of range")));
        }
        Ok(Field { inner: self.inner.u(i) })
    }
    fn h_norms(&self) -> Vec<f64> {
        (0..self.inner.times.len()).map(|i| h_norm(&self.inner.u(i))).collect()
    }
    /// Ledger rows as tuples in the order of `ledger_columns()`.
    fn ledger(&self) -> Vec<Vec<f64>> {
        self.inner
            .ledger
            .rows
            .iter()
            .map(|r| {
                let mut v = vec![r.step as f64, r.time];
                v.extend(r.values());
                v
            })
            .collect()
    }
    #[staticmethod]
    fn ledger_columns() -> Vec<&'static str> {
        scbf_core::solver::LedgerRow::COLUMNS.to_vec()
    }
    /// Energy-equality residual report as JSON.
    fn energy_residual(&self) -> PyResult<String> {
        serde_json::to_string(&check_energy_equality(&self.inner.ledger).map_err(err)?).map_err(json_err)
    }
    /// A-priori bound report as JSON.
    fn apriori(&self) -> PyResult<String> {
        serde_json::to_string(&check_apriori_bound(&self.inner).map_err(err)?).map_err(json_err)
    }
}

/// Solves on `[0, t]` from `u(0) = x`.
#[pyfunction]
#[pyo3(signature = (x, noise, params, t, dt, store_every = 1))]
fn solve(py: Python<'_>, x: &Field, noise: &Noise, params: &Params, t: f64, dt: f64, store_every: usize) -> PyResult<Trajectory> {
    let cfg = solver(params, dt, store_every);
    let (x, om) = (x.inner.clone(), noise.inner.clone());
    let traj = py
        .detach(move || {
            let ou = ou_path(&om, &cfg.params, 0.0, t)?;
            solve_transformed(&(&x - &ou.state(0)), &ou, 0.0, t, &cfg)
        })
        .map_err(err)?;
    Ok(Trajectory { inner: traj })
}

/// `φ(t, ω, x)`.
#[pyfunction]
fn cocycle(py: Python<'_>, t: f64, noise: &Noise, x: &Field, params: &Params, dt: f64) -> PyResult<Field> {
    let cfg = solver(params, dt, 1);
    let (x, om) = (x.inner.clone(), noise.inner.clone());
    Ok(Field { inner: py.detach(move || cocycle_phi(t, &om, &x, &cfg)).map_err(err)? })
}

/// `φ(t, θ_{-t} ω, x)`.
#[pyfunction]
fn pullback(py: Python<'_>, t: f64, noise: &Noise, x: &Field, params: &Params, dt: f64) -> PyResult<Field> {
    let cfg = solver(params, dt, 1);
    let (x, om) = (x.inner.clone(), noise.inner.clone());
    Ok(Field { inner: py.detach(move || pullback_solve(t, &om, &x, &cfg)).map_err(err)? })
}

/// Relative gap `‖φ(t+s, ω, x) - φ(t, θ_s ω, φ(s, ω, x))‖_H`.
#[pyfunction]
fn cocycle_gap(x: &Field, noise: &Noise, s: f64, t: f64, params: &Params, dt: f64) -> PyResult<f64> {
    Ok(check_cocycle(&x.inner, &noise.inner, s, t, &solver(params, dt, 1)).map_err(err)?.relative)
}

/// Relative gap between the solutions reconstructed with two OU shifts.
#[pyfunction]
fn chi_gap(x: &Field, noise: &Noise, t: f64, chi1: f64, chi2: f64, params: &Params, dt: f64) -> PyResult<f64> {
    Ok(check_chi_independence(&x.inner, &noise.inner, t, chi1, chi2, &solver(params, dt, 1)).map_err(err)?.relative)
}

/// Documented reference configuration.
#[pyfunction]
fn reference_config() -> &'static str {
    REFERENCE_CONFIG
}

/// SHA-256 of a configuration after validation.
#[pyfunction]
fn config_hash(toml_text: &str) -> PyResult<String> {
    Ok(ExperimentConfig::from_toml(toml_text).map_err(err)?.hash())
}

/// Runs a configuration; writes the run directory when `out` is given. Returns the report as JSON.
#[pyfunction]
#[pyo3(signature = (toml_text, out = None, seed_override = None))]
fn run_experiment(py: Python<'_>, toml_text: &str, out: Option<PathBuf>, seed_override: Option<u64>) -> PyResult<String> {
    let mut cfg = ExperimentConfig::from_toml(toml_text).map_err(err)?;
    if let Some(s) = seed_override {
        cfg = cfg.with_seed(s);
    }
    let exp = Experiment::new(cfg).map_err(err)?;
    let res = py.detach(|| -> scbf_core::Result<_> {
        let o = execute(&exp)?;
        if let Some(dir) = &out {
            write_run(dir, &exp, &o)?;
        }
        Ok(o.report)
    });
    serde_json::to_string(&res.map_err(err)?).map_err(json_err)
}

/// Re-analyzes a stored run directory. Returns the report as JSON.
#[pyfunction]
fn check_run(py: Python<'_>, run_dir: PathBuf) -> PyResult<String> {
    let rep = py.detach(|| verify_run(&run_dir)).map_err(err)?;
    serde_json::to_string(&rep).map_err(json_err)
}

#[pymodule]
fn scbf(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Params>()?;
    m.add_class::<Domain>()?;
    m.add_class::<Field>()?;
    m.add_class::<Noise>()?;
    m.add_class::<Trajectory>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(cocycle, m)?)?;
    m.add_function(wrap_pyfunction!(pullback, m)?)?;
    m.add_function(wrap_pyfunction!(cocycle_gap, m)?)?;
    m.add_function(wrap_pyfunction!(chi_gap, m)?)?;
    m.add_function(wrap_pyfunction!(reference_config, m)?)?;
    m.add_function(wrap_pyfunction!(config_hash, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(check_run, m)?)?;
    Ok(())
}
