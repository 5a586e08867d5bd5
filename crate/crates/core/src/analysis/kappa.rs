use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::energy::{apriori_constant, AprioriBranch};
use crate::error::{invalid, Error, Result};
use crate::noise::wiener::steps_of;
use crate::noise::{ou_path, ou_path_from_state, Omega};
use crate::solver::{pullback_many, SolverConfig};
use crate::spectral::{h_norm, h_norm_sq, PhysicalParams, SpectralField};

/// Tail tolerance for the exponential weight at the truncation point.
pub const DEFAULT_TAIL_TOL: f64 = 1e-6;

/// Truncation horizon `T` with `e^{-2αT}` well below `tol`.
pub fn auto_horizon(alpha: f64, tol: f64) -> f64 {
    1.25 * (1.0 / tol).ln() / (2.0 * alpha) + 1.0
}

/// `‖Υ‖²_H`, `‖Υ‖⁴_{L⁴}` and `‖Υ‖^{r+1}_{L^{r+1}}` on an evenly spaced grid ending at time 0.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NormSeries {
    pub dim: usize,
    pub lambda1: f64,
    /// Time of the first entry; entry `j` sits at `t_lo + j·h`.
    pub t_lo: f64,
    pub h: f64,
    pub h2: Vec<f64>,
    pub l4_4: Vec<f64>,
    pub lr1: Vec<f64>,
}

const CHUNK_STEPS: i64 = 4096;

impl NormSeries {
    /// Samples every `stride`-th noise step of `Υ` on `[t_lo, 0]`.
    ///
    /// The path is generated in chunks and matches a single [`ou_path`] call
    /// state for state; the noise anchor must precede `t_lo`.
    pub fn build(omega: &Omega, params: &PhysicalParams, t_lo: f64, stride: usize) -> Result<Self> {
        if stride == 0 {
            return Err(invalid("stride", "must be at least 1"));
        }
        let dt = omega.wiener.dt();
        let stride = stride as i64;
        let i_lo = steps_of(t_lo, dt, "t_lo")?;
        if i_lo > 0 || i_lo % stride != 0 {
            return Err(invalid("t_lo", format!("must be a nonpositive multiple of {}", stride as f64 * dt)));
        }
        let chunk = (CHUNK_STEPS / stride).max(1) * stride;
        let p = params.r + 1.0;
        let (mut h2, mut l4_4, mut lr1) = (Vec::new(), Vec::new(), Vec::new());
        let mut start = i_lo;
        let mut state: Option<Vec<f64>> = None;
        loop {
            let end = (start + chunk).min(0);
            let (t0, t1) = (start as f64 * dt, end as f64 * dt);
            let path = match &state {
                None => ou_path(omega, params, t0, t1)?,
                Some(s) => ou_path_from_state(omega, params, t0, t1, s)?,
            };
            // Continuation chunks start on the previous chunk's last sample.
            let skip = if state.is_some() { stride as usize } else { 0 };
            let picks: Vec<usize> = (skip..path.len()).step_by(stride as usize).collect();
            let rows: Vec<(f64, f64, f64)> = picks
                .par_iter()
                .map(|&i| {
                    let u = path.state(i);
                    let phys = u.to_physical();
                    (h_norm_sq(&u), phys.lp_pow(4.0), phys.lp_pow(p))
                })
                .collect();
            for (a, b, c) in rows {
                h2.push(a);
                l4_4.push(b);
                lr1.push(c);
            }
            if end == 0 {
                break;
            }
            state = Some(path.amps(path.len() - 1).to_vec());
            start = end;
        }
        let dom = omega.spectrum.domain();
        Ok(Self {
            dim: dom.dim(),
            lambda1: dom.lambda1(),
            t_lo,
            h: stride as f64 * dt,
            h2,
            l4_4,
            lr1,
        })
    }

    pub fn len(&self) -> usize {
        self.h2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h2.is_empty()
    }

    fn index_of(&self, t: f64) -> Result<usize> {
        let j = steps_of(t - self.t_lo, self.h, "time")?;
        if j < 0 || j as usize >= self.len() {
            return Err(Error::OutOfWindow { time: t, start: self.t_lo, end: self.t_lo + (self.len() - 1) as f64 * self.h });
        }
        Ok(j as usize)
    }

    /// Trapezoid cumulative `∫_{t_lo}^{t_j} ‖Υ‖⁴_{L⁴}`.
    fn cumulative_l4(&self) -> Vec<f64> {
        let mut acc = Vec::with_capacity(self.len());
        let mut s = 0.0;
        acc.push(0.0);
        for w in self.l4_4.windows(2) {
            s += 0.5 * self.h * (w[0] + w[1]);
            acc.push(s);
        }
        acc
    }

    /// `-2αt + R∫_{-t}^0 ‖Υ‖⁴_{L⁴}`, the logarithm of the pullback weight.
    pub fn log_pullback_weight(&self, alpha: f64, growth: f64, t: f64) -> Result<f64> {
        let cum = self.cumulative_l4();
        let e = self.index_of(0.0)?;
        let b = self.index_of(-t)?;
        Ok(-2.0 * alpha * t + growth * (cum[e] - cum[b]))
    }
}

/// Absorbing radii evaluated at `θ_{-shift}ω` with history truncated at `horizon`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KappaRow {
    pub shift: f64,
    pub horizon: f64,
    /// `Weighted` is class 𝔎₁ (`d = 2`, `r < 3`); `Plain` is 𝔎₂.
    pub class: AprioriBranch,
    /// `κ₁ … κ₆`.
    pub kappa: [f64; 6],
    pub kappa11: f64,
    pub kappa12: f64,
    pub kappa13: f64,
    /// Weight at the truncation point.
    pub tail_weight: f64,
    /// Constant `C` entering `κ₁₁`.
    pub c: f64,
}

impl KappaRow {
    pub const NAMES: [&'static str; 9] =
        ["kappa1", "kappa2", "kappa3", "kappa4", "kappa5", "kappa6", "kappa11", "kappa12", "kappa13"];

    pub fn values(&self) -> [f64; 9] {
        let k = self.kappa;
        [k[0], k[1], k[2], k[3], k[4], k[5], self.kappa11, self.kappa12, self.kappa13]
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct KappaSettings {
    pub horizon: f64,
    pub tail_tol: f64,
}

impl KappaSettings {
    pub fn auto(alpha: f64) -> Self {
        Self { horizon: auto_horizon(alpha, DEFAULT_TAIL_TOL), tail_tol: DEFAULT_TAIL_TOL }
    }
}

/// Evaluates every `κ` by quadrature over `[-shift - horizon, -shift]`, the horizon rounded up to the series grid.
pub fn compute_kappa(
    series: &NormSeries,
    params: &PhysicalParams,
    f_vprime_sq: f64,
    shift: f64,
    settings: &KappaSettings,
) -> Result<KappaRow> {
    let k = apriori_constant(params, series.dim, series.lambda1)?;
    let cum = series.cumulative_l4();
    let h = series.h;
    let e = series.index_of(-shift)?;
    let span = (settings.horizon / h - 1e-9).ceil().max(0.0) as usize;
    let b = e.checked_sub(span).ok_or(Error::OutOfWindow {
        time: -shift - settings.horizon,
        start: series.t_lo,
        end: 0.0,
    })?;
    let log_w = |j: usize| 2.0 * params.alpha * (j as f64 - e as f64) * h + k.growth * (cum[e] - cum[j]);
    let tail_weight = log_w(b).exp();
    if !(tail_weight <= settings.tail_tol) {
        return Err(Error::HorizonTooShort { horizon: span as f64 * h, weight: tail_weight });
    }
    let (mut sup2, mut i3, mut i4, mut i5, mut i6) = (0.0f64, 0.0, 0.0, 0.0, 0.0);
    for j in b..=e {
        let w = log_w(j).exp();
        let q = if j == b || j == e { 0.5 * h } else { h };
        sup2 = sup2.max(series.h2[j] * w);
        i3 += q * series.lr1[j] * w;
        i4 += q * series.h2[j] * w;
        i5 += q * series.l4_4[j] * w;
        i6 += q * w;
    }
    let k11_sq = 2.0 + 2.0 * sup2 + k.c * (i4 + i5 + i3 + f_vprime_sq * i6);
    let kappa12 = series.h2[e].sqrt();
    let kappa11 = k11_sq.sqrt();
    Ok(KappaRow {
        shift,
        horizon: span as f64 * h,
        class: k.branch,
        kappa: [kappa12, sup2.sqrt(), i3.sqrt(), i4.sqrt(), i5.sqrt(), i6.sqrt()],
        kappa11,
        kappa12,
        kappa13: kappa11 + kappa12,
        tail_weight,
        c: k.c,
    })
}

/// One weighted sequence `κ(θ_{-t}ω)² e^{-2αt + R∫_{-t}^0‖Υ‖⁴}` over increasing `t`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KappaDecay {
    pub name: String,
    pub horizons: Vec<f64>,
    pub weighted: Vec<f64>,
    /// Non-increasing over the final `⌈n/2⌉` horizons.
    pub decreasing: bool,
}

/// Finite-horizon trend test standing in for `limsup = 0`; evidence, not proof.
pub fn check_kappa_class(
    name: &str, horizons: &[f64], kappa_sq: &[f64], log_weight: &[f64]) -> Result<KappaDecay> {
    let n = horizons.len();
    if n < 4 {
        return Err(Error::InsufficientHorizons { needed: 4, got: n });
    }
    if kappa_sq.len() != n || log_weight.len() != n {
        return Err(Error::SizeMismatch { expected: n, got: kappa_sq.len().min(log_weight.len()) });
    }
    if horizons.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("horizons", "must be strictly increasing"));
    }
    let weighted: Vec<f64> = kappa_sq.iter().zip(log_weight).map(|(k, l)| k * l.exp()).collect();
    let tail = &weighted[n - n.div_ceil(2)..];
    let decreasing = tail.windows(2).all(|w| w[1] <= w[0]) && weighted.iter().all(|x| x.is_finite());
    Ok(KappaDecay { name: name.to_string(), horizons: horizons.to_vec(), weighted, decreasing })
}

/// Weighted sequences of every `κ` at the given shifts, all from one series.
pub fn kappa_class_sweep(
    series: &NormSeries,
    params: &PhysicalParams,
    f_vprime_sq: f64,
    horizons: &[f64],
    settings: &KappaSettings,
) -> Result<Vec<KappaDecay>> {
    let rows: Vec<KappaRow> = horizons
        .iter()
        .map(|&t| compute_kappa(series, params, f_vprime_sq, t, settings))
        .collect::<Result<_>>()?;
    let growth = apriori_constant(params, series.dim, series.lambda1)?.growth;
    let logw: Vec<f64> = horizons
        .iter()
        .map(|&t| series.log_pullback_weight(params.alpha, growth, t))
        .collect::<Result<_>>()?;
    KappaRow::NAMES
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let sq: Vec<f64> = rows.iter().map(|r| r.values()[i].powi(2)).collect();
            check_kappa_class(name, horizons, &sq, &logw)
        })
        .collect()
}

/// Outcome of pulling an ensemble back over a grid of horizons.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AbsorptionLedger {
    pub kappa: KappaRow,
    /// `max ‖x‖_H` over the ensemble.
    pub rho: f64,
    pub horizons: Vec<f64>,
    /// `max_x ‖φ(t, θ_{-t}ω, x)‖_H` per horizon.
    pub max_norm: Vec<f64>,
    /// First horizon after which every state lies in the `κ₁₃` ball.
    pub t_d: Option<f64>,
    /// `(1/α) log(2ρ²/κ₁₁²)`.
    pub predicted_t_d: f64,
    pub within_factor_three: bool,
}

impl AbsorptionLedger {
    pub fn absorbed(&self) -> bool {
        self.t_d.is_some()
    }
}

pub fn check_absorption(
    xs: &[SpectralField],
    omega: &Omega,
    horizons: &[f64],
    kappa: &KappaRow,
    config: &SolverConfig,
) -> Result<AbsorptionLedger> {
    if xs.is_empty() || horizons.is_empty() {
        return Err(invalid("absorption", "needs at least one initial condition and one horizon"));
    }
    if horizons.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("horizons", "must be strictly increasing"));
    }
    let states = pullback_many(horizons, omega, xs, config)?;
    let max_norm: Vec<f64> = states.iter().map(|s| s.iter().map(h_norm).fold(0.0, f64::max)).collect();
    let ball = kappa.kappa13;
    let first_inside = max_norm.iter().rposition(|&m| m > ball).map_or(0, |i| i + 1);
    let t_d = horizons.get(first_inside).copied();
    let rho = xs.iter().map(h_norm).fold(0.0, f64::max);
    let alpha = config.params.alpha;
    let predicted_t_d = (2.0 * rho * rho / kappa.kappa11.powi(2)).ln() / alpha;
    let within_factor_three = t_d.is_some_and(|t| predicted_t_d > 0.0 && t >= predicted_t_d / 3.0 && t <= 3.0 * predicted_t_d);
    Ok(AbsorptionLedger {
        kappa: kappa.clone(),
        rho,
        horizons: horizons.to_vec(),
        max_norm,
        t_d,
        predicted_t_d,
        within_factor_three,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    use crate::noise::{ColoringSpectrum, WienerPath};
    use crate::spectral::{random_field, Domain, DomainSpec};

    fn omega(amp: f64, anchor: f64) -> Omega {
        let dom = Domain::new(DomainSpec::cube(2, 16)).unwrap();
        let sp = ColoringSpectrum::build(&dom, 0.25, amp, 1.0).unwrap();
        Omega::new(Arc::new(sp), WienerPath::new(5, 0.01).unwrap().with_anchor_time(anchor))
    }

    fn params(alpha: f64) -> PhysicalParams {
        PhysicalParams { mu: 1.0, alpha, beta: 0.5, r: 3.0, chi: 0.0 }
    }

    #[test]
    fn chunked_series_matches_single_path() {
        let om = omega(1.0, -60.0);
        let p = params(1.0);
        let s = NormSeries::build(&om, &p, -50.0, 4).unwrap();
        let path = ou_path(&om, &p, -50.0, 0.0).unwrap();
        assert_eq!(s.len(), 1251);
        for j in [0, 1, 1023, 1024, 1025, 1250] {
            assert_eq!(s.h2[j], h_norm_sq(&path.state(4 * j)), "{j}");
        }
    }

    #[test]
    fn zero_noise_kappa_closed_form() {
        let om = omega(0.0, -40.0);
        for alpha in [1.0, 2.0] {
            let p = params(alpha);
            let s = NormSeries::build(&om, &p, -30.0, 1).unwrap();
            let row = compute_kappa(&s, &p, 0.0, 0.0, &KappaSettings::auto(alpha)).unwrap();
            assert_eq!(&row.kappa[..5], &[0.0; 5]);
            // Trapezoid of e^{2αs} on [-T, 0] is the exact integral times (αh)coth(αh).
            let (t, ah) = (row.horizon, alpha * s.h);
            let exact = (1.0 - (-2.0 * alpha * t).exp()) / (2.0 * alpha) * ah / ah.tanh();
            assert!((row.kappa[5].powi(2) - exact).abs() < 1e-12 * exact);
            assert_eq!(row.kappa11, 2f64.sqrt());
        }
    }

    #[test]
    fn short_horizons_are_rejected() {
        let om = omega(0.5, -40.0);
        let p = params(1.0);
        let s = NormSeries::build(&om, &p, -30.0, 1).unwrap();
        let short = KappaSettings { horizon: 2.0, tail_tol: 1e-6 };
        assert!(matches!(compute_kappa(&s, &p, 0.0, 0.0, &short), Err(Error::HorizonTooShort { .. })));
        let hs = [5.0, 10.0, 20.0];
        assert!(matches!(
            check_kappa_class("k", &hs, &[1.0; 3], &[0.0; 3]),
            Err(Error::InsufficientHorizons { .. })
        ));
    }

    #[test]
    fn constant_kappa_decays_geometrically_without_noise() {
        let hs = [5.0, 10.0, 20.0, 40.0];
        let logw: Vec<f64> = hs.iter().map(|t| -2.0 * t).collect();
        let d = check_kappa_class("k", &hs, &[3.0; 4], &logw).unwrap();
        assert!(d.decreasing);
        assert!((d.weighted[3] - 3.0 * (-80f64).exp()).abs() < 1e-40);
    }

    #[test]
    fn kappa_is_reproducible_and_shift_consistent() {
        let om = omega(0.5, -40.0);
        let p = params(1.0);
        let s = NormSeries::build(&om, &p, -30.0, 2).unwrap();
        let set = KappaSettings::auto(1.0);
        let a = compute_kappa(&s, &p, 0.1, 5.0, &set).unwrap();
        let b = compute_kappa(&NormSeries::build(&om, &p, -30.0, 2).unwrap(), &p, 0.1, 5.0, &set).unwrap();
        assert_eq!(a.values(), b.values());
        assert!(a.kappa13 >= a.kappa11 && a.values().iter().all(|x| x.is_finite()));
    }

    #[test]
    fn noiseless_origin_stays_in_the_ball() {
        let om = omega(0.0, -10.0);
        let p = params(1.0);
        let s = NormSeries::build(&om, &p, -10.0, 1).unwrap();
        let k = compute_kappa(&s, &p, 0.0, 0.0, &KappaSettings { horizon: 8.0, tail_tol: 1e-6 }).unwrap();
        let x = SpectralField::zeros(om.spectrum.domain().clone());
        let cfg = SolverConfig::new(p, 0.01);
        let l = check_absorption(&[x], &om, &[0.5, 1.0], &k, &cfg).unwrap();
        assert_eq!(l.t_d, Some(0.5));
        assert_eq!(l.max_norm, vec![0.0, 0.0]);
    }

    #[test]
    fn larger_ensembles_take_longer_to_absorb() {
        let om = omega(0.0, -10.0);
        let p = PhysicalParams { mu: 0.1, alpha: 1.0, beta: 0.01, r: 3.0, chi: 1.0 };
        let s = NormSeries::build(&om, &p, -10.0, 1).unwrap();
        let k = compute_kappa(&s, &p, 0.0, 0.0, &KappaSettings { horizon: 8.0, tail_tol: 1e-6 }).unwrap();
        let cfg = SolverConfig::new(p, 0.01);
        let hs: Vec<f64> = (1..=40).map(|i| 0.1 * i as f64).collect();
        let dom = om.spectrum.domain();
        let td: Vec<f64> = [5.0, 10.0]
            .iter()
            .map(|&rho| {
                let x = random_field(dom, 3, rho * k.kappa13);
                check_absorption(&[x], &om, &hs, &k, &cfg).unwrap().t_d.unwrap()
            })
            .collect();
        assert!(td[0] < td[1], "{td:?}");
    }
}
