use rayon::prelude::*;

use super::config::SolverConfig;
use super::integrator::Integrator;
use crate::error::{invalid, Result};
use crate::noise::wiener::steps_of;
use crate::noise::{ou_path, Omega, OuPath};
use crate::spectral::SpectralField;

/// `φ(t, ω, x) = v(t) + Υ(ω)(t)` with `v(0) = x - Υ(ω)(0)`.
pub fn cocycle_phi(t: f64, omega: &Omega, x: &SpectralField, config: &SolverConfig) -> Result<SpectralField> {
    if steps_of(t, config.dt, "t")? < 0 {
        return Err(invalid("t", "must be nonnegative"));
    }
    if t == 0.0 {
        return Ok(x.clone());
    }
    let ou = ou_path(omega, &config.params, 0.0, t)?;
    run_from(&ou, 0.0, t, x, config)
}

/// Runs from `t_start` to `t_end` on a path covering both, returning `u(t_end)`.
fn run_from(ou: &OuPath, t_start: f64, t_end: f64, x: &SpectralField, config: &SolverConfig) -> Result<SpectralField> {
    let start = ou.index_at(t_start)?;
    let v0 = x - &ou.state(start);
    let mut it = Integrator::new(config, ou, t_start, v0)?;
    let n = steps_of(t_end - t_start, config.dt, "horizon")?;
    for _ in 0..n {
        it.advance()?;
    }
    Ok(it.u())
}

/// `φ(t, θ_{-t}ω, x)`: the state at time 0 of the run started at `-t` from `x`.
pub fn pullback_solve(t: f64, omega: &Omega, x: &SpectralField, config: &SolverConfig) -> Result<SpectralField> {
    steps_of(t, config.dt, "horizon")?;
    if t == 0.0 {
        return Ok(x.clone());
    }
    let ou = ou_path(omega, &config.params, -t, 0.0)?;
    run_from(&ou, -t, 0.0, x, config)
}

/// Pullback states for several horizons, sharing one path over `[-max t, 0]`.
///
/// Identical to separate [`pullback_solve`] calls: path states depend only on
/// the noise anchor, not on the window.
pub fn pullback_many(
    horizons: &[f64],
    omega: &Omega,
    xs: &[SpectralField],
    config: &SolverConfig,
) -> Result<Vec<Vec<SpectralField>>> {
    let tmax = horizons.iter().cloned().fold(0.0, f64::max);
    if horizons.iter().any(|&t| t < 0.0) {
        return Err(invalid("horizons", "must be nonnegative"));
    }
    let ou = ou_path(omega, &config.params, -tmax, 0.0)?;
    let jobs: Vec<(usize, usize)> = (0..horizons.len())
        .flat_map(|h| (0..xs.len()).map(move |i| (h, i)))
        .collect();
    let results: Vec<Result<SpectralField>> = jobs
        .par_iter()
        .map(|&(h, i)| {
            let t = horizons[h];
            if t == 0.0 {
                Ok(xs[i].clone())
            } else {
                run_from(&ou, -t, 0.0, &xs[i], config)
            }
        })
        .collect();
    let mut out = vec![Vec::with_capacity(xs.len()); horizons.len()];
    for ((h, _), r) in jobs.into_iter().zip(results) {
        out[h].push(r?);
    }
    Ok(out)
}
