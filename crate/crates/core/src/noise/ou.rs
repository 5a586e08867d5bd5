use std::sync::Arc;

use rayon::prelude::*;

use super::coloring::ColoringSpectrum;
use super::wiener::{steps_of, Omega, WienerPath};
use crate::error::{invalid, Error, Result};
use crate::spectral::{PhysicalParams, SpectralField};

/// One exact step of `dy = -γ y dt + σ dw` over `h`, driven by the standard normal `z`.
pub fn ou_exact_step(old: f64, h: f64, gamma: f64, sigma: f64, z: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(invalid("h", format!("step must be positive, got {h}")));
    }
    if !(gamma > 0.0) {
        return Err(invalid("gamma", format!("decay rate must be positive, got {gamma}")));
    }
    let (decay, coef) = step_coefficients(h, gamma, sigma);
    Ok(decay * old + coef * z)
}

/// `(e^{-γh}, σ·√((1 - e^{-2γh}) / (2γ)))`.
fn step_coefficients(h: f64, gamma: f64, sigma: f64) -> (f64, f64) {
    let decay = (-gamma * h).exp();
    let var = -(-2.0 * gamma * h).exp_m1() / (2.0 * gamma);
    (decay, sigma * var.sqrt())
}

/// Stored states of the stationary OU process `Υ_χ` on a time window.
///
/// States are real-mode amplitudes in the order of [`ColoringSpectrum::modes`].
#[derive(Clone, Debug)]
pub struct OuPath {
    spectrum: Arc<ColoringSpectrum>,
    mu: f64,
    chi: f64,
    wiener: WienerPath,
    start: i64,
    n_states: usize,
    amps: Vec<f64>,
}

const BLOCK: usize = 128;

struct Stepper {
    decay: Vec<f64>,
    coef: Vec<f64>,
}

impl Stepper {
    fn new(spectrum: &ColoringSpectrum, mu: f64, chi: f64, h: f64) -> Self {
        let (decay, coef) = spectrum
            .gammas(mu, chi)
            .iter()
            .zip(spectrum.sigma())
            .map(|(&g, &s)| step_coefficients(h, g, s))
            .unzip();
        Self { decay, coef }
    }

    /// Advances `state` through steps `from..to`, calling `keep` after each.
    fn run(&self, wiener: &WienerPath, state: &mut [f64], from: i64, to: i64, mut keep: impl FnMut(&[f64])) {
        let m = state.len();
        let mut n = from;
        while n < to {
            let len = ((to - n) as usize).min(BLOCK);
            let draws: Vec<Vec<f64>> = (0..len as i64)
                .into_par_iter()
                .map(|j| wiener.gaussians(n + j, m))
                .collect();
            for z in &draws {
                for i in 0..m {
                    state[i] = self.decay[i] * state[i] + self.coef[i] * z[i];
                }
                keep(state);
            }
            n += len as i64;
        }
    }
}

fn window(wiener: &WienerPath, t0: f64, t1: f64) -> Result<(i64, i64)> {
    if !(t0 <= t1) {
        return Err(invalid("window", format!("need t0 <= t1, got [{t0}, {t1}]")));
    }
    Ok((steps_of(t0, wiener.dt(), "t0")?, steps_of(t1, wiener.dt(), "t1")?))
}

fn check_params(params: &PhysicalParams) -> Result<()> {
    if !(params.mu > 0.0) || !(params.chi >= 0.0) {
        return Err(invalid("params", "OU path needs mu > 0 and chi >= 0"));
    }
    Ok(())
}

/// Stationary OU path on `[t0, t1]`, initialized in law at the noise anchor.
pub fn ou_path(omega: &Omega, params: &PhysicalParams, t0: f64, t1: f64) -> Result<OuPath> {
    check_params(params)?;
    let wiener = omega.wiener;
    let (i0, i1) = window(&wiener, t0, t1)?;
    let a = wiener.anchor_index();
    if a > i0 {
        return Err(Error::OutOfWindow {
            time: t0,
            start: wiener.anchor_time(),
            end: f64::INFINITY,
        });
    }
    let spectrum = &omega.spectrum;
    let mut state: Vec<f64> = spectrum
        .stationary_variances(params.mu, params.chi)
        .iter()
        .zip(wiener.anchor_gaussians(spectrum.n_modes()))
        .map(|(v, z)| v.sqrt() * z)
        .collect();
    let stepper = Stepper::new(spectrum, params.mu, params.chi, wiener.dt());
    stepper.run(&wiener, &mut state, a, i0, |_| {});
    Ok(fill(omega, params, &stepper, state, i0, i1))
}

/// OU path on `[t0, t1]` started from the given amplitudes at `t0`, with the same draws as [`ou_path`].
pub fn ou_path_from_state(omega: &Omega, params: &PhysicalParams, t0: f64, t1: f64, init: &[f64]) -> Result<OuPath> {
    check_params(params)?;
    let (i0, i1) = window(&omega.wiener, t0, t1)?;
    if init.len() != omega.spectrum.n_modes() {
        return Err(Error::SizeMismatch {
            expected: omega.spectrum.n_modes(),
            got: init.len(),
        });
    }
    let stepper = Stepper::new(&omega.spectrum, params.mu, params.chi, omega.wiener.dt());
    Ok(fill(omega, params, &stepper, init.to_vec(), i0, i1))
}

fn fill(omega: &Omega, params: &PhysicalParams, stepper: &Stepper, mut state: Vec<f64>, i0: i64, i1: i64) -> OuPath {
    let n_states = (i1 - i0) as usize + 1;
    let mut amps = Vec::with_capacity(n_states * state.len());
    amps.extend_from_slice(&state);
    stepper.run(&omega.wiener, &mut state, i0, i1, |s| amps.extend_from_slice(s));
    OuPath {
        spectrum: omega.spectrum.clone(),
        mu: params.mu,
        chi: params.chi,
        wiener: omega.wiener,
        start: i0,
        n_states,
        amps,
    }
}

impl OuPath {
    pub fn spectrum(&self) -> &Arc<ColoringSpectrum> {
        &self.spectrum
    }
    pub fn wiener(&self) -> &WienerPath {
        &self.wiener
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn chi(&self) -> f64 {
        self.chi
    }
    pub fn dt(&self) -> f64 {
        self.wiener.dt()
    }
    pub fn len(&self) -> usize {
        self.n_states
    }
    pub fn is_empty(&self) -> bool {
        self.n_states == 0
    }
    /// Relative step index of the first state.
    pub fn start_index(&self) -> i64 {
        self.start
    }
    pub fn time(&self, i: usize) -> f64 {
        (self.start + i as i64) as f64 * self.dt()
    }
    pub fn t0(&self) -> f64 {
        self.time(0)
    }
    pub fn t1(&self) -> f64 {
        self.time(self.n_states - 1)
    }

    /// Position of time `t` among the stored states.
    pub fn index_at(&self, t: f64) -> Result<usize> {
        let n = steps_of(t, self.dt(), "time")? - self.start;
        if n < 0 || n as usize >= self.n_states {
            return Err(Error::OutOfWindow { time: t, start: self.t0(), end: self.t1() });
        }
        Ok(n as usize)
    }

    pub fn amps(&self, i: usize) -> &[f64] {
        let m = self.spectrum.n_modes();
        &self.amps[i * m..(i + 1) * m]
    }

    pub fn state(&self, i: usize) -> SpectralField {
        self.spectrum.synthesize(self.amps(i))
    }

    pub fn state_at(&self, t: f64) -> Result<SpectralField> {
        Ok(self.state(self.index_at(t)?))
    }
}

/// Per-step defect of the linear equation satisfied by `Υ_{χ1} - Υ_{χ2}`.
///
/// For each step, `E_i = (Υ_i(t+h) - e^{-γ_i h} Υ_i(t)) / (h c_i)` with
/// `c_i = √((1 - e^{-2γ_i h}) / (2γ_i h))` recovers the realized forcing of path
/// `i`; the defect is `h·max_m |E_1 - E_2|` relative to the largest state
/// amplitude at the step's endpoints (absolute when both states vanish).
pub fn chi_difference_residual(p1: &OuPath, p2: &OuPath) -> Result<Vec<f64>> {
    if p1.wiener.seed() != p2.wiener.seed()
        || p1.wiener.offset() != p2.wiener.offset()
        || p1.dt() != p2.dt()
        || p1.start != p2.start
        || p1.n_states != p2.n_states
        || p1.mu != p2.mu
        || !Arc::ptr_eq(&p1.spectrum, &p2.spectrum) && p1.spectrum.sigma() != p2.spectrum.sigma()
    {
        return Err(Error::Config("chi-difference needs paths with identical seed, window, step, spectrum and mu".into()));
    }
    let h = p1.dt();
    let rate = |p: &OuPath| -> Vec<(f64, f64)> {
        p.spectrum
            .gammas(p.mu, p.chi)
            .iter()
            .map(|&g| ((-g * h).exp(), (-(-2.0 * g * h).exp_m1() / (2.0 * g * h)).sqrt()))
            .collect()
    };
    let (r1, r2) = (rate(p1), rate(p2));
    let mut out = Vec::with_capacity(p1.n_states.saturating_sub(1));
    for n in 0..p1.n_states.saturating_sub(1) {
        let (a0, a1, b0, b1) = (p1.amps(n), p1.amps(n + 1), p2.amps(n), p2.amps(n + 1));
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for m in 0..a0.len() {
            let e1 = (a1[m] - r1[m].0 * a0[m]) / (h * r1[m].1);
            let e2 = (b1[m] - r2[m].0 * b0[m]) / (h * r2[m].1);
            worst = worst.max((e1 - e2).abs());
            scale = scale.max(a0[m].abs()).max(a1[m].abs()).max(b0[m].abs()).max(b1[m].abs());
        }
        let defect = h * worst;
        out.push(if scale > 0.0 { defect / scale } else { defect });
    }
    Ok(out)
}
