use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::noise::{ou_path, Omega};
use crate::solver::{cocycle_phi, solve_transformed, SolverConfig, Trajectory};
use crate::spectral::{h_norm, h_norm_sq, lp_pow, v_norm_sq, PhysicalParams, SpectralField};

/// Gap between the reconstructed solutions for two OU shift parameters.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChiGap {
    pub chi1: f64,
    pub chi2: f64,
    pub times: Vec<f64>,
    /// `‖u^{χ1}(t) - u^{χ2}(t)‖_H` at each stored time.
    pub gap: Vec<f64>,
    pub max: f64,
    /// `max_t ‖u^{χ1}(t)‖_H`.
    pub scale: f64,
    pub relative: f64,
}

fn run_with_chi(x: &SpectralField, omega: &Omega, t: f64, chi: f64, config: &SolverConfig) -> Result<Trajectory> {
    let params = PhysicalParams { chi, ..config.params };
    params.regime(x.domain().dim())?;
    let cfg = SolverConfig { params, ..config.clone() };
    let ou = ou_path(omega, &params, 0.0, t)?;
    let v0 = x - &ou.state(0);
    solve_transformed(&v0, &ou, 0.0, t, &cfg)
}

/// Runs the cocycle from `x` over `[0, t]` once per `χ` on the same noise and compares `u = v + Υ_χ`.
pub fn check_chi_independence(
    x: &SpectralField,
    omega: &Omega,
    t: f64,
    chi1: f64,
    chi2: f64,
    config: &SolverConfig,
) -> Result<ChiGap> {
    let a = run_with_chi(x, omega, t, chi1, config)?;
    let b = run_with_chi(x, omega, t, chi2, config)?;
    let mut gap = Vec::with_capacity(a.times.len());
    let mut scale: f64 = 0.0;
    for i in 0..a.times.len() {
        let ua = a.u(i);
        gap.push(h_norm(&(&ua - &b.u(i))));
        scale = scale.max(h_norm(&ua));
    }
    let max = gap.iter().cloned().fold(0.0, f64::max);
    Ok(ChiGap {
        chi1,
        chi2,
        times: a.times,
        gap,
        max,
        scale,
        relative: if scale > 0.0 { max / scale } else { max },
    })
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CocycleGap {
    pub s: f64,
    pub t: f64,
    /// `‖φ(t+s, ω, x) - φ(t, θ_s ω, φ(s, ω, x))‖_H`.
    pub gap: f64,
    /// Gap over `max(‖φ(t+s, ω, x)‖_H, ‖x‖_H)`.
    pub relative: f64,
}

pub fn check_cocycle(x: &SpectralField, omega: &Omega, s: f64, t: f64, config: &SolverConfig) -> Result<CocycleGap> {
    if s < 0.0 || t < 0.0 {
        return Err(invalid("cocycle", "s and t must be nonnegative"));
    }
    config.params.regime(x.domain().dim())?;
    let direct = cocycle_phi(t + s, omega, x, config)?;
    let mid = cocycle_phi(s, omega, x, config)?;
    let composed = cocycle_phi(t, &omega.shift(s)?, &mid, config)?;
    let gap = h_norm(&(&direct - &composed));
    let scale = h_norm(&direct).max(h_norm(x));
    Ok(CocycleGap { s, t, gap, relative: if scale > 0.0 { gap / scale } else { gap } })
}

/// Norms of `y_n = u_n - u` for data `(x + e/n, f + g/n)` on a shared noise path.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ContinuityRow {
    pub n: u32,
    /// `sup_t ‖y_n‖_H`.
    pub sup_h: f64,
    /// `(∫‖y_n‖²_V)^{1/2}`.
    pub l2_v: f64,
    /// `(∫‖y_n‖^{r+1}_{L^{r+1}})^{1/(r+1)}`.
    pub l_r1: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContinuityTable {
    pub rows: Vec<ContinuityRow>,
    /// Every norm is non-increasing in `n`.
    pub monotone: bool,
    /// `sup_h(n_i) / sup_h(n_{i+1})` for consecutive rows.
    pub sup_ratios: Vec<f64>,
}

/// Perturbation family for [`check_data_continuity`]; `None` leaves that datum fixed.
#[derive(Clone, Debug, Default)]
pub struct DataPerturbation {
    pub initial: Option<SpectralField>,
    pub forcing: Option<SpectralField>,
}

pub fn check_data_continuity(
    x: &SpectralField,
    perturbation: &DataPerturbation,
    omega: &Omega,
    t: f64,
    ns: &[u32],
    config: &SolverConfig,
) -> Result<ContinuityTable> {
    if ns.is_empty() || ns.iter().any(|&n| n == 0) || ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("ns", "must be a nonempty increasing list of positive integers"));
    }
    let params = config.params;
    params.regime(x.domain().dim())?;
    let base_cfg = config.clone().with_store_every(1);
    let ou = ou_path(omega, &params, 0.0, t)?;
    let ups0 = ou.state(0);
    let reference = solve_transformed(&(x - &ups0), &ou, 0.0, t, &base_cfg)?;
    let dt = config.dt;
    let p = params.r + 1.0;
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let h = 1.0 / n as f64;
        let xn = perturbation.initial.as_ref().map_or_else(|| x.clone(), |e| x.axpy(h, e));
        let mut cfg = base_cfg.clone();
        if let Some(g) = &perturbation.forcing {
            cfg.forcing = Some(match &config.forcing {
                Some(f) => f.axpy(h, g),
                None => g.scaled(h),
            });
        }
        let run = solve_transformed(&(&xn - &ups0), &ou, 0.0, t, &cfg)?;
        let (mut sup_h, mut v2, mut lr): (f64, f64, f64) = (0.0, 0.0, 0.0);
        let last = run.states.len() - 1;
        for (i, (a, b)) in run.states.iter().zip(&reference.states).enumerate() {
            let y = a - b;
            sup_h = sup_h.max(h_norm_sq(&y).sqrt());
            if i < last {
                v2 += v_norm_sq(&y) * dt;
                lr += lp_pow(&y, p) * dt;
            }
        }
        rows.push(ContinuityRow { n, sup_h, l2_v: v2.sqrt(), l_r1: lr.powf(1.0 / p) });
    }
    let monotone = rows
        .windows(2)
        .all(|w| w[1].sup_h <= w[0].sup_h && w[1].l2_v <= w[0].l2_v && w[1].l_r1 <= w[0].l_r1);
    let sup_ratios = rows
        .windows(2)
        .map(|w| if w[1].sup_h > 0.0 { w[0].sup_h / w[1].sup_h } else { f64::INFINITY })
        .collect();
    Ok(ContinuityTable { rows, monotone, sup_ratios })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    use crate::noise::{ColoringSpectrum, WienerPath};
    use crate::spectral::{random_field, Domain, DomainSpec};

    fn omega(amp: f64) -> Omega {
        let dom = Domain::new(DomainSpec::cube(2, 16)).unwrap();
        let sp = ColoringSpectrum::build(&dom, 0.25, amp, 1.0).unwrap();
        Omega::new(Arc::new(sp), WienerPath::new(11, 0.005).unwrap().with_anchor_time(-4.0))
    }

    fn cfg(dt: f64) -> SolverConfig {
        SolverConfig::new(PhysicalParams { mu: 0.2, alpha: 0.5, beta: 0.5, r: 3.0, chi: 0.0 }, dt)
    }

    #[test]
    fn equal_chi_gives_zero_gap() {
        let om = omega(1.0);
        let x = random_field(om.spectrum.domain(), 2, 1.0);
        let g = check_chi_independence(&x, &om, 0.5, 0.7, 0.7, &cfg(0.01)).unwrap();
        assert_eq!(g.max, 0.0);
    }

    #[test]
    fn noiseless_chi_gap_is_zero() {
        let om = omega(0.0);
        let x = random_field(om.spectrum.domain(), 2, 1.0);
        assert_eq!(check_chi_independence(&x, &om, 0.5, 0.0, 1.0, &cfg(0.01)).unwrap().max, 0.0);
    }

    #[test]
    fn chi_gap_shrinks_with_dt() {
        let om = omega(1.0);
        let x = random_field(om.spectrum.domain(), 2, 1.0);
        let g: Vec<f64> = [0.01, 0.005]
            .iter()
            .map(|&dt| check_chi_independence(&x, &om, 1.0, 0.0, 1.0, &cfg(dt)).unwrap().max)
            .collect();
        assert!(g[1] < 0.75 * g[0], "{g:?}");
    }

    #[test]
    fn cocycle_trivial_cases_and_noise() {
        let om = omega(1.0);
        let x = random_field(om.spectrum.domain(), 3, 1.0);
        assert_eq!(check_cocycle(&x, &om, 0.0, 0.5, &cfg(0.01)).unwrap().gap, 0.0);
        assert!(check_cocycle(&x, &om, 0.5, 0.0, &cfg(0.01)).unwrap().relative < 1e-14);
        let g = check_cocycle(&x, &om, 0.5, 0.5, &cfg(0.01)).unwrap();
        assert!(g.relative < 1e-10, "{}", g.relative);
    }

    #[test]
    fn zero_perturbation_gives_zero_gaps() {
        let om = omega(0.5);
        let x = random_field(om.spectrum.domain(), 3, 1.0);
        let p = DataPerturbation {
            initial: Some(SpectralField::zeros(x.domain().clone())),
            forcing: None,
        };
        let t = check_data_continuity(&x, &p, &om, 0.3, &[1, 2], &cfg(0.01)).unwrap();
        assert!(t.rows.iter().all(|r| r.sup_h == 0.0 && r.l2_v == 0.0 && r.l_r1 == 0.0));
    }

    #[test]
    fn forcing_perturbation_decays() {
        let om = omega(0.5);
        let x = random_field(om.spectrum.domain(), 3, 1.0);
        let p = DataPerturbation { initial: None, forcing: Some(random_field(x.domain(), 8, 0.1)) };
        let t = check_data_continuity(&x, &p, &om, 0.5, &[1, 2, 4], &cfg(0.01)).unwrap();
        assert!(t.monotone);
        assert!(t.rows[2].sup_h > 0.0);
        assert!(check_data_continuity(&x, &p, &om, 0.5, &[2, 1], &cfg(0.01)).is_err());
    }
}
