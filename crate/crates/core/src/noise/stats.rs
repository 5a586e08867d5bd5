use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::coloring::ColoringSpectrum;
use super::ou::ou_path;
use super::wiener::{Omega, WienerPath};
use crate::error::{invalid, Result};
use crate::spectral::PhysicalParams;

/// Monte Carlo estimate against the closed form, for one real mode.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub estimate: f64,
    pub exact: f64,
    pub std_error: f64,
}

impl MomentEstimate {
    fn from_products(xs: &[f64], exact: f64) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Self { estimate: mean, exact, std_error: (var / n).sqrt() }
    }

    /// `|estimate - exact|` in standard errors.
    pub fn z_score(&self) -> f64 {
        if self.std_error > 0.0 {
            (self.estimate - self.exact).abs() / self.std_error
        } else if self.estimate == self.exact {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ModeStatistics {
    pub mode: usize,
    pub gamma: f64,
    /// `E Υ_m(t)² = σ_m²/(2γ_m)`.
    pub variance: MomentEstimate,
    /// `E Υ_m(t) Υ_m(t+h) = σ_m²/(2γ_m) e^{-γ_m h}`.
    pub autocovariance: MomentEstimate,
}

/// Stationary variance and lag-`lag` autocovariance of selected real modes over independent seeds.
pub fn ou_mode_statistics(
    spectrum: &Arc<ColoringSpectrum>,
    params: &PhysicalParams,
    dt: f64,
    lag: f64,
    seeds: &[u64],
    modes: &[usize],
) -> Result<Vec<ModeStatistics>> {
    if seeds.len() < 2 {
        return Err(invalid("seeds", "need at least two samples"));
    }
    if let Some(&m) = modes.iter().find(|&&m| m >= spectrum.n_modes()) {
        return Err(invalid("modes", format!("mode {m} out of range 0..{}", spectrum.n_modes())));
    }
    let pairs: Vec<Vec<(f64, f64)>> = seeds
        .par_iter()
        .map(|&seed| {
            let wiener = WienerPath::new(seed, dt)?.with_anchor_time(0.0);
            let path = ou_path(&Omega::new(spectrum.clone(), wiener), params, 0.0, lag)?;
            let (a, b) = (path.amps(0), path.amps(path.len() - 1));
            Ok(modes.iter().map(|&m| (a[m], b[m])).collect())
        })
        .collect::<Result<_>>()?;
    let gammas = spectrum.gammas(params.mu, params.chi);
    let vars = spectrum.stationary_variances(params.mu, params.chi);
    Ok(modes
        .iter()
        .enumerate()
        .map(|(j, &m)| {
            let sq: Vec<f64> = pairs.iter().map(|p| p[j].0 * p[j].0).collect();
            let lagged: Vec<f64> = pairs.iter().map(|p| p[j].0 * p[j].1).collect();
            ModeStatistics {
                mode: m,
                gamma: gammas[m],
                variance: MomentEstimate::from_products(&sq, vars[m]),
                autocovariance: MomentEstimate::from_products(&lagged, vars[m] * (-gammas[m] * lag).exp()),
            }
        })
        .collect())
}
