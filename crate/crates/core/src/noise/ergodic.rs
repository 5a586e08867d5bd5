use serde::{Deserialize, Serialize};

use super::ou::OuPath;
use crate::error::{invalid, Result};
use crate::spectral::PhysicalParams;

/// `‖Υ(t_i)‖^p_{L^q}` for every stored state.
pub fn lp_series(path: &OuPath, q: f64, p: f64) -> Vec<f64> {
    (0..path.len())
        .map(|i| path.state(i).to_physical().lp_norm(q).powf(p))
        .collect()
}

/// Left-point time average `(1/t) ∫ ‖Υ(s)‖^p_{L^q} ds` over the whole path window.
pub fn ergodic_average(path: &OuPath, q: f64, p: f64) -> Result<f64> {
    if path.len() < 2 {
        return Err(invalid("window", "ergodic average needs a window of positive length"));
    }
    let series = lp_series(path, q, p);
    let span = path.t1() - path.t0();
    Ok(series[..series.len() - 1].iter().sum::<f64>() * path.dt() / span)
}

/// Empirical check of `R ∫_{-t}^0 ‖Υ‖⁴_{L⁴} ds ≤ α t` on a path ending at time 0.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GrowthThresholdReport {
    /// `(1/T) ∫_{-T}^0 ‖Υ‖⁴_{L⁴}` over the whole window.
    pub time_average: f64,
    /// `α / R`.
    pub threshold: f64,
    /// Smallest grid time after which the inequality holds through the window end.
    pub t0: Option<f64>,
    pub passed: bool,
}

pub fn growth_threshold(path: &OuPath, params: &PhysicalParams) -> Result<GrowthThresholdReport> {
    if path.len() < 2 {
        return Err(invalid("window", "threshold check needs a window of positive length"));
    }
    let r = params.growth_constant();
    let l4 = lp_series(path, 4.0, 4.0);
    let dt = path.dt();
    let n = path.len() - 1;
    // Integral over [-t_j, 0] with t_j = j dt, left point rule.
    let mut ok_from: Option<usize> = None;
    let mut acc = 0.0;
    let mut holds = Vec::with_capacity(n);
    for j in 1..=n {
        acc += l4[n - j] * dt;
        holds.push(r * acc <= params.alpha * j as f64 * dt);
    }
    for j in (0..n).rev() {
        if holds[j] {
            ok_from = Some(j);
        } else {
            break;
        }
    }
    let time_average = acc / (n as f64 * dt);
    let threshold = params.alpha / r;
    Ok(GrowthThresholdReport {
        time_average,
        threshold,
        t0: ok_from.map(|j| (j + 1) as f64 * dt),
        passed: time_average <= threshold,
    })
}
