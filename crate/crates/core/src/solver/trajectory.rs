use serde::{Deserialize, Serialize};

use super::config::SolverConfig;
use super::integrator::{Integrator, LedgerRow};
use crate::error::{Error, Result};
use crate::noise::wiener::steps_of;
use crate::noise::OuPath;
use crate::spectral::{vprime_norm_sq, PhysicalParams, SpectralField};

/// Per-step energy terms of one run.
///
/// Row `n` holds the state at `t_n`; its integrands drive the step to `t_{n+1}`.
/// A final row closes the window, so a run of `N` steps has `N + 1` rows.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub params: PhysicalParams,
    pub dt: f64,
    pub f_vprime_sq: f64,
    pub rows: Vec<LedgerRow>,
}

impl EnergyLedger {
    pub fn steps(&self) -> usize {
        self.rows.len().saturating_sub(1)
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `v` at each stored time.
    pub states: Vec<SpectralField>,
    /// `Υ` at each stored time.
    pub upsilon: Vec<SpectralField>,
    pub ledger: EnergyLedger,
}

impl Trajectory {
    pub fn final_v(&self) -> &SpectralField {
        self.states.last().expect("trajectory stores its initial state")
    }
    /// `u = v + Υ` at stored index `i`.
    pub fn u(&self, i: usize) -> SpectralField {
        &self.states[i] + &self.upsilon[i]
    }
}

/// Integrates the transformed system from `t0` to `t0 + t` with `v(t0) = v0`.
pub fn solve_transformed(
    v0: &SpectralField,
    ou: &OuPath,
    t0: f64,
    t: f64,
    config: &SolverConfig,
) -> Result<Trajectory> {
    config.validate()?;
    let n_steps = steps_of(t, config.dt, "T")?;
    if n_steps < 0 {
        return Err(crate::error::invalid("T", "must be nonnegative"));
    }
    let end = t0 + t;
    if ou.index_at(t0).is_err() || ou.index_at(end).is_err() {
        return Err(Error::OutOfWindow { time: end, start: ou.t0(), end: ou.t1() });
    }
    let mut it = Integrator::new(config, ou, t0, v0.clone())?;
    let mut times = vec![it.time()];
    let mut states = vec![v0.clone()];
    let mut upsilon = vec![it.upsilon()];
    let mut rows = Vec::with_capacity(n_steps as usize + 1);
    for n in 0..n_steps as usize {
        rows.push(it.advance()?);
        let stored = (n + 1) % config.store_every == 0 || n + 1 == n_steps as usize;
        if stored {
            times.push(it.time());
            states.push(it.v().clone());
            upsilon.push(it.upsilon());
        }
    }
    rows.push(it.current_row()?);
    Ok(Trajectory {
        times,
        states,
        upsilon,
        ledger: EnergyLedger {
            params: config.params,
            dt: config.dt,
            f_vprime_sq: config.forcing.as_ref().map_or(0.0, vprime_norm_sq),
            rows,
        },
    })
}
