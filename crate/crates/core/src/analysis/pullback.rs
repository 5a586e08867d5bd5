use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::noise::{ou_path, Omega};
use crate::solver::{pullback_many, Integrator, SolverConfig};
use crate::spectral::{h_norm, Regime, SpectralField};

/// Relative slack for the per-step monotonicity of the difference norm.
pub const STEP_MONOTONE_SLACK: f64 = 1e-10;

/// `‖u_a - u_b‖_H` along two runs sharing the same noise from `-t` to 0.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LockstepDifference {
    pub times: Vec<f64>,
    pub diff: Vec<f64>,
    /// Largest `diff[n+1] - diff[n]`, over `diff[0]`.
    pub max_increase: f64,
}

pub fn lockstep_difference(
    xa: &SpectralField,
    xb: &SpectralField,
    omega: &Omega,
    t: f64,
    config: &SolverConfig,
) -> Result<LockstepDifference> {
    let ou = ou_path(omega, &config.params, -t, 0.0)?;
    let ups = ou.state(0);
    let mut a = Integrator::new(config, &ou, -t, xa - &ups)?;
    let mut b = Integrator::new(config, &ou, -t, xb - &ups)?;
    let mut times = vec![-t];
    let mut diff = vec![h_norm(&(a.v() - b.v()))];
    while a.remaining_steps() > 0 {
        a.advance()?;
        b.advance()?;
        times.push(a.time());
        diff.push(h_norm(&(a.v() - b.v())));
    }
    let inc = diff.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    let max_increase = if diff[0] > 0.0 { inc / diff[0] } else { inc.max(0.0) };
    Ok(LockstepDifference { times, diff, max_increase })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PullbackTable {
    pub horizons: Vec<f64>,
    /// `g(t) = ‖φ(t, θ_{-t}ω, x_a) - φ(t, θ_{-t}ω, x_b)‖_H`.
    pub gap: Vec<f64>,
    /// `g` non-increasing over the horizons.
    pub decreasing: bool,
    /// Per-step record over the longest horizon, for the critical three-dimensional regime.
    pub lockstep: Option<LockstepDifference>,
}

impl PullbackTable {
    pub fn step_monotone(&self) -> Option<bool> {
        self.lockstep.as_ref().map(|l| l.max_increase <= STEP_MONOTONE_SLACK)
    }

    pub fn passed(&self) -> bool {
        self.decreasing && self.step_monotone().unwrap_or(true)
    }
}

/// Pullback images of two initial data at each horizon; evidence for asymptotic compactness, not a proof.
pub fn pullback_attraction_diagnostic(
    xa: &SpectralField,
    xb: &SpectralField,
    omega: &Omega,
    horizons: &[f64],
    config: &SolverConfig,
) -> Result<PullbackTable> {
    if horizons.is_empty() || horizons.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("horizons", "must be a nonempty increasing list"));
    }
    let regime = config.params.regime(xa.domain().dim())?;
    let states = pullback_many(horizons, omega, &[xa.clone(), xb.clone()], config)?;
    let gap: Vec<f64> = states.iter().map(|s| h_norm(&(&s[0] - &s[1]))).collect();
    let decreasing = gap.windows(2).all(|w| w[1] <= w[0]);
    let lockstep = if regime == Regime::Critical3d {
        Some(lockstep_difference(xa, xb, omega, horizons[horizons.len() - 1], config)?)
    } else {
        None
    };
    Ok(PullbackTable { horizons: horizons.to_vec(), gap, decreasing, lockstep })
}
