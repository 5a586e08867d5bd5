use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{auto_horizon, DEFAULT_TAIL_TOL};
use crate::error::{Error, Result};
use crate::spectral::{DomainSpec, PhysicalParams};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainBlock {
    pub dim: usize,
    pub grid_n: usize,
    /// Side lengths; defaults to `2π` on every axis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub box_len: Option<Vec<f64>>,
}

impl DomainBlock {
    pub fn spec(&self) -> DomainSpec {
        DomainSpec {
            dim: self.dim,
            grid_n: self.grid_n,
            box_len: self.box_len.clone().unwrap_or_else(|| vec![2.0 * PI; self.dim]),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseBlock {
    pub seed: u64,
    /// Wiener step; the solver step must be a multiple.
    pub dt: f64,
    pub delta: f64,
    /// Spectral decay exponent of `σ_k = base_amp |k|^{-s}`.
    pub s: f64,
    pub base_amp: f64,
    /// Length of history before time 0 at which the stationary OU state is drawn.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub history: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    Random,
    Shear,
    Zero,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialBlock {
    pub kind: InitialKind,
    /// `‖x‖_H`.
    pub norm: f64,
    pub seed: u64,
    /// Wavenumber of the shear profile.
    #[serde(default = "one")]
    pub mode: i64,
}

fn one() -> i64 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunBlock {
    #[serde(alias = "T")]
    pub t_final: f64,
    pub dt: f64,
    pub store_every: usize,
    /// Pullback horizons for the attraction and class checks.
    pub horizons: Vec<f64>,
    pub ensemble_size: usize,
    pub initial: InitialBlock,
    /// `‖f‖_H` of a random time-independent forcing; 0 disables it.
    #[serde(default)]
    pub forcing_norm: f64,
    #[serde(default)]
    pub forcing_seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Identities,
    Inequalities,
    OuStatistics,
    EnergyEquality,
    AprioriBound,
    ChiIndependence,
    Cocycle,
    DataContinuity,
    Kappa,
    KappaClass,
    Absorption,
    Pullback,
}

impl CheckKind {
    pub const ALL: [CheckKind; 12] = [
        CheckKind::Identities,
        CheckKind::Inequalities,
        CheckKind::OuStatistics,
        CheckKind::EnergyEquality,
        CheckKind::AprioriBound,
        CheckKind::ChiIndependence,
        CheckKind::Cocycle,
        CheckKind::DataContinuity,
        CheckKind::Kappa,
        CheckKind::KappaClass,
        CheckKind::Absorption,
        CheckKind::Pullback,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            CheckKind::Identities => "identities",
            CheckKind::Inequalities => "inequalities",
            CheckKind::OuStatistics => "ou_statistics",
            CheckKind::EnergyEquality => "energy_equality",
            CheckKind::AprioriBound => "apriori_bound",
            CheckKind::ChiIndependence => "chi_independence",
            CheckKind::Cocycle => "cocycle",
            CheckKind::DataContinuity => "data_continuity",
            CheckKind::Kappa => "kappa",
            CheckKind::KappaClass => "kappa_class",
            CheckKind::Absorption => "absorption",
            CheckKind::Pullback => "pullback",
        }
    }

    /// Pass threshold used when the config gives none.
    pub fn default_tolerance(&self) -> f64 {
        match self {
            CheckKind::Identities | CheckKind::Inequalities => 1e-8,
            CheckKind::OuStatistics => 3.0,
            CheckKind::EnergyEquality => 5e-2,
            CheckKind::AprioriBound => 0.0,
            CheckKind::ChiIndependence => 1e-2,
            CheckKind::Cocycle => 1e-10,
            CheckKind::DataContinuity => 1.6,
            CheckKind::Kappa => DEFAULT_TAIL_TOL,
            CheckKind::KappaClass => 0.0,
            CheckKind::Absorption => 3.0,
            CheckKind::Pullback => 1e-10,
        }
    }
}

/// One requested check; unset options take per-check defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSpec {
    pub name: CheckKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    /// Sample count for randomized sweeps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Second shift parameter for the χ-independence check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi_ref: Option<f64>,
    /// Cocycle split `(s, t)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<[f64; 2]>,
    /// Horizon grid step for the absorption time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
}

impl CheckSpec {
    pub fn new(name: CheckKind) -> Self {
        Self { name, tolerance: None, samples: None, chi_ref: None, split: None, step: None }
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance.unwrap_or_else(|| self.name.default_tolerance())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub domain: DomainBlock,
    pub params: PhysicalParams,
    pub noise: NoiseBlock,
    pub run: RunBlock,
    #[serde(default)]
    pub check: Vec<CheckSpec>,
}

/// Reference configuration with every default documented; parses to [`ExperimentConfig::default`].
pub const REFERENCE_CONFIG: &str = r#"# Experiment configuration for `scbf run`, `scbf sweep` and `scbf check`.
# Every field below is shown at its default value.

[domain]
dim = 2             # 2 or 3
grid_n = 32         # points per axis, a power of two
# box_len = [6.283185307179586, 6.283185307179586]   # default 2π per axis, so λ₁ = 1

[params]
mu = 0.1            # Brinkman viscosity, > 0
alpha = 0.5         # Darcy coefficient, > 0
beta = 0.5          # Forchheimer coefficient, > 0
r = 3.0             # absorption exponent, >= 1
chi = 0.0           # OU shift, >= 0
# Admissible: d=2 with any r >= 1; d=3 with r > 3, or r = 3 with 2*beta*mu >= 1.

[noise]
seed = 42
dt = 0.0025         # Wiener step; run.dt must be a multiple
delta = 0.25        # smoothing exponent in (0, 1/2)
s = 1.0             # sigma_k = base_amp * |k|^(-s)
base_amp = 0.5      # 0 switches the noise off
# history = 64.0    # default: longest horizon plus the kappa truncation, plus 1

[run]
t_final = 2.0       # forward run on [0, t_final]
dt = 0.0025         # solver step
store_every = 40    # snapshot stride in steps
horizons = [5.0, 10.0, 20.0, 40.0]
ensemble_size = 20  # initial conditions in the absorption check
forcing_norm = 0.0  # H-norm of a random time-independent forcing
forcing_seed = 0

[run.initial]
kind = "random"     # "random", "shear" or "zero"
norm = 1.0          # H-norm of the initial condition
seed = 7
mode = 1            # wavenumber of the shear profile

# Checks run after the forward solve. Options left out take per-check defaults:
#   identities        tolerance 1e-8, samples 500
#   inequalities      tolerance 1e-8, samples 500
#   ou_statistics     tolerance 3 (standard errors), samples 10000
#   energy_equality   tolerance 5e-2 (relative residual)
#   apriori_bound     tolerance 0 (extra relative slack)
#   chi_independence  tolerance 1e-2 (relative gap), chi_ref 1 (0 when chi = 1)
#   cocycle           tolerance 1e-10, split [1.0, 1.0]
#   data_continuity   tolerance 1.6 (minimum halving ratio)
#   kappa             tolerance 1e-6 (tail weight)
#   kappa_class       horizons from run.horizons
#   absorption        tolerance 3 (factor on the predicted time), step 0.1
#   pullback          tolerance 1e-10 (per-step slack in the critical 3D regime)

[[check]]
name = "energy_equality"

[[check]]
name = "apriori_bound"

[[check]]
name = "chi_independence"

[[check]]
name = "cocycle"
"#;

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            domain: DomainBlock { dim: 2, grid_n: 32, box_len: None },
            params: PhysicalParams { mu: 0.1, alpha: 0.5, beta: 0.5, r: 3.0, chi: 0.0 },
            noise: NoiseBlock { seed: 42, dt: 2.5e-3, delta: 0.25, s: 1.0, base_amp: 0.5, history: None },
            run: RunBlock {
                t_final: 2.0,
                dt: 2.5e-3,
                store_every: 40,
                horizons: vec![5.0, 10.0, 20.0, 40.0],
                ensemble_size: 20,
                initial: InitialBlock { kind: InitialKind::Random, norm: 1.0, seed: 7, mode: 1 },
                forcing_norm: 0.0,
                forcing_seed: 0,
            },
            check: [CheckKind::EnergyEquality, CheckKind::AprioriBound, CheckKind::ChiIndependence, CheckKind::Cocycle]
                .into_iter()
                .map(CheckSpec::new)
                .collect(),
        }
    }
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn is_multiple(x: f64, of: f64) -> bool {
    let q = x / of;
    (q - q.round()).abs() <= 1e-9 * q.abs().max(1.0)
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Full validation; runs before any computation.
    pub fn validate(&self) -> Result<()> {
        self.domain.spec().validate()?;
        self.params.regime(self.domain.dim)?;
        let n = &self.noise;
        if !(n.dt.is_finite() && n.dt > 0.0) {
            return Err(config_err(format!("noise.dt must be positive, got {}", n.dt)));
        }
        if !(n.delta > 0.0 && n.delta < 0.5) {
            return Err(config_err(format!("noise.delta must lie in (0, 1/2), got {}", n.delta)));
        }
        if !(n.s.is_finite() && n.s > 0.0) || !(n.base_amp.is_finite() && n.base_amp >= 0.0) {
            return Err(config_err("noise.s must be positive and noise.base_amp nonnegative"));
        }
        let r = &self.run;
        if !(r.dt.is_finite() && r.dt > 0.0) || !is_multiple(r.dt, n.dt) {
            return Err(config_err(format!("run.dt = {} must be a positive multiple of noise.dt = {}", r.dt, n.dt)));
        }
        if !(r.t_final > 0.0) || !is_multiple(r.t_final, r.dt) {
            return Err(config_err(format!("run.t_final = {} must be a positive multiple of run.dt", r.t_final)));
        }
        if r.store_every == 0 {
            return Err(config_err("run.store_every must be at least 1"));
        }
        if r.horizons.iter().any(|&h| !(h > 0.0) || !is_multiple(h, r.dt)) || r.horizons.windows(2).any(|w| w[0] >= w[1]) {
            return Err(config_err("run.horizons must be increasing positive multiples of run.dt"));
        }
        if !(r.initial.norm.is_finite() && r.initial.norm >= 0.0) || !(r.forcing_norm.is_finite() && r.forcing_norm >= 0.0) {
            return Err(config_err("initial and forcing norms must be nonnegative"));
        }
        if let Some(h) = n.history {
            if !(h >= self.required_history()) {
                return Err(config_err(format!(
                    "noise.history = {h} is shorter than the {} the checks need",
                    self.required_history()
                )));
            }
        }
        for c in &self.check {
            if let Some(t) = c.tolerance {
                if !t.is_finite() || t < 0.0 {
                    return Err(config_err(format!("tolerance of {} must be finite and nonnegative", c.name.name())));
                }
            }
            if c.samples == Some(0) {
                return Err(config_err(format!("samples of {} must be positive", c.name.name())));
            }
            if let Some([s, t]) = c.split {
                if s < 0.0 || t < 0.0 || !is_multiple(s, r.dt) || !is_multiple(t, r.dt) {
                    return Err(config_err("cocycle split must be nonnegative multiples of run.dt"));
                }
            }
            if let Some(st) = c.step {
                if !(st > 0.0) || !is_multiple(st, r.dt) {
                    return Err(config_err("absorption step must be a positive multiple of run.dt"));
                }
            }
            let needs_horizons = matches!(c.name, CheckKind::KappaClass | CheckKind::Pullback);
            if needs_horizons && r.horizons.is_empty() {
                return Err(config_err(format!("{} needs run.horizons", c.name.name())));
            }
            if c.name == CheckKind::KappaClass && r.horizons.len() < 4 {
                return Err(config_err("kappa_class needs at least 4 horizons"));
            }
            if c.name == CheckKind::Absorption && r.ensemble_size == 0 {
                return Err(config_err("absorption needs run.ensemble_size >= 1"));
            }
        }
        Ok(())
    }

    /// History before time 0 covering the longest horizon and the κ truncation.
    pub fn required_history(&self) -> f64 {
        let hmax = self.run.horizons.iter().cloned().fold(0.0, f64::max);
        hmax + auto_horizon(self.params.alpha, DEFAULT_TAIL_TOL) + 1.0
    }

    pub fn history(&self) -> f64 {
        self.noise.history.unwrap_or_else(|| self.required_history().ceil())
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.noise.seed = seed;
        self
    }
}

/// Scalar fields a sweep may vary.
pub const SWEEP_AXES: [&str; 13] = [
    "mu", "alpha", "beta", "r", "chi", "dt", "t_final", "noise.seed", "noise.dt", "noise.base_amp", "noise.delta",
    "noise.s", "initial.norm",
];

impl ExperimentConfig {
    /// Copy with one scalar replaced; unknown axes are errors.
    pub fn with_axis(&self, axis: &str, value: f64) -> Result<Self> {
        let mut c = self.clone();
        let axis = axis.strip_prefix("params.").or_else(|| axis.strip_prefix("run.")).unwrap_or(axis);
        match axis {
            "mu" => c.params.mu = value,
            "alpha" => c.params.alpha = value,
            "beta" => c.params.beta = value,
            "r" => c.params.r = value,
            "chi" => c.params.chi = value,
            "dt" => c.run.dt = value,
            "t_final" => c.run.t_final = value,
            "noise.seed" | "seed" => {
                if !(value >= 0.0 && value.fract() == 0.0) {
                    return Err(config_err(format!("seed must be a nonnegative integer, got {value}")));
                }
                c.noise.seed = value as u64
            }
            "noise.dt" => c.noise.dt = value,
            "noise.base_amp" | "base_amp" => c.noise.base_amp = value,
            "noise.delta" => c.noise.delta = value,
            "noise.s" => c.noise.s = value,
            "initial.norm" => c.run.initial.norm = value,
            other => {
                return Err(config_err(format!("unknown sweep axis `{other}`; known axes: {}", SWEEP_AXES.join(", "))))
            }
        }
        Ok(c)
    }
}
