use serde::{Deserialize, Serialize};

use super::config::SolverConfig;
use crate::error::{invalid, Error, Result};
use crate::noise::OuPath;
use crate::noise::wiener::steps_of;
use crate::spectral::{h_norm_sq, nonlinear_terms, stokes, v_norm_sq, PhysicalParams, SpectralField};

/// Terms of the transformed right-hand side at one instant.
#[derive(Clone, Debug)]
pub struct Rhs {
    /// `-μAv - αv`, treated implicitly.
    pub linear: SpectralField,
    /// `-B(v+Υ) - βC(v+Υ) + (χ-α)Υ + f`, treated explicitly.
    pub explicit: SpectralField,
}

impl Rhs {
    pub fn total(&self) -> SpectralField {
        &self.linear + &self.explicit
    }
}

/// Right-hand side of `dv/dt = -μAv - B(v+Υ) - αv - βC(v+Υ) + (χ-α)Υ + f`.
pub fn rhs_transformed(
    v: &SpectralField,
    upsilon: &SpectralField,
    params: &PhysicalParams,
    f: Option<&SpectralField>,
) -> Result<Rhs> {
    if !v.same_domain(upsilon) || f.is_some_and(|f| !v.same_domain(f)) {
        return Err(Error::DomainMismatch);
    }
    let w = v + upsilon;
    let nl = nonlinear_terms(&w, params.r, true, true)?;
    Ok(Rhs {
        linear: stokes(v).scaled(-params.mu).axpy(-params.alpha, v),
        explicit: explicit_part(&nl.b, &nl.c, upsilon, params, f),
    })
}

fn explicit_part(
    b: &SpectralField,
    c: &SpectralField,
    upsilon: &SpectralField,
    params: &PhysicalParams,
    f: Option<&SpectralField>,
) -> SpectralField {
    let mut e = b.scaled(-1.0).axpy(-params.beta, c);
    if params.chi != params.alpha {
        e = e.axpy(params.chi - params.alpha, upsilon);
    }
    if let Some(f) = f {
        e = &e + f;
    }
    e
}

/// Every term of the energy balance at the left end of one step.
///
/// With `w = v + Υ`: `b_w_v_ups = b(w, v, Υ) = -⟨B(w), v⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub step: usize,
    pub time: f64,
    pub v_h2: f64,
    pub v_v2: f64,
    pub w_lr1: f64,
    pub b_w_v_ups: f64,
    pub c_w_v: f64,
    pub c_w_ups: f64,
    pub f_v: f64,
    pub ups_v: f64,
    pub ups_h2: f64,
    pub ups_l4_4: f64,
    pub ups_lr1: f64,
}

impl LedgerRow {
    pub const COLUMNS: [&'static str; 13] = [
        "step", "time", "v_h2", "v_v2", "w_lr1", "b_w_v_ups", "c_w_v", "c_w_ups", "f_v", "ups_v", "ups_h2",
        "ups_l4_4", "ups_lr1",
    ];

    pub fn values(&self) -> [f64; 11] {
        [
            self.v_h2,
            self.v_v2,
            self.w_lr1,
            self.b_w_v_ups,
            self.c_w_v,
            self.c_w_ups,
            self.f_v,
            self.ups_v,
            self.ups_h2,
            self.ups_l4_4,
            self.ups_lr1,
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.time.is_finite() && self.values().iter().all(|x| x.is_finite())
    }
}

/// Evaluates a ledger row from a state, without stepping.
pub fn ledger_row(
    step: usize,
    time: f64,
    v: &SpectralField,
    upsilon: &SpectralField,
    config: &SolverConfig,
) -> Result<LedgerRow> {
    let w = v + upsilon;
    let nl = nonlinear_terms(&w, config.params.r, true, true)?;
    Ok(row_from(step, time, v, upsilon, &nl.b, &nl.c, nl.phys.lp_pow(config.params.r + 1.0), config))
}

#[allow(clippy::too_many_arguments)]
fn row_from(
    step: usize,
    time: f64,
    v: &SpectralField,
    upsilon: &SpectralField,
    b: &SpectralField,
    c: &SpectralField,
    w_lr1: f64,
    config: &SolverConfig,
) -> LedgerRow {
    let r = config.params.r;
    let up = upsilon.to_physical();
    LedgerRow {
        step,
        time,
        v_h2: h_norm_sq(v),
        v_v2: v_norm_sq(v),
        w_lr1,
        b_w_v_ups: -b.inner(v),
        c_w_v: c.inner(v),
        c_w_ups: c.inner(upsilon),
        f_v: config.forcing.as_ref().map_or(0.0, |f| f.inner(v)),
        ups_v: upsilon.inner(v),
        ups_h2: h_norm_sq(upsilon),
        ups_l4_4: up.lp_pow(4.0),
        ups_lr1: up.lp_pow(r + 1.0),
    }
}

/// Step-by-step IMEX-Euler integrator reading `Υ` from a precomputed OU path.
#[derive(Debug)]
pub struct Integrator<'a> {
    config: &'a SolverConfig,
    ou: &'a OuPath,
    stride: usize,
    pos: usize,
    step: usize,
    v: SpectralField,
    guard_norm: f64,
    implicit: Vec<f64>,
}

/// Number of noise steps per solver step.
pub fn noise_stride(dt: f64, noise_dt: f64) -> Result<usize> {
    let m = steps_of(dt, noise_dt, "dt")?;
    if m < 1 {
        return Err(invalid("dt", format!("solver step {dt} is smaller than the noise step {noise_dt}")));
    }
    Ok(m as usize)
}

impl<'a> Integrator<'a> {
    /// Starts at time `t_start` from `v0`; the path must cover `t_start`.
    pub fn new(config: &'a SolverConfig, ou: &'a OuPath, t_start: f64, v0: SpectralField) -> Result<Self> {
        config.validate()?;
        let dom = v0.domain().clone();
        if *dom != **ou.spectrum().domain()
            || config.forcing.as_ref().is_some_and(|f| !f.same_domain(&v0))
        {
            return Err(Error::DomainMismatch);
        }
        let stride = noise_stride(config.dt, ou.dt())?;
        let pos = ou.index_at(t_start)?;
        let p = &config.params;
        let n = dom.len();
        let implicit: Vec<f64> = (0..dom.dim() * n)
            .map(|i| 1.0 / (1.0 + config.dt * (p.mu * dom.k2(i % n) + p.alpha)))
            .collect();
        let scale = h_norm_sq(&v0).sqrt().max(h_norm_sq(&ou.state(pos)).sqrt()).max(1.0);
        Ok(Self {
            config,
            ou,
            stride,
            pos,
            step: 0,
            v: v0,
            guard_norm: config.guard * scale,
            implicit,
        })
    }

    pub fn time(&self) -> f64 {
        self.ou.time(self.pos)
    }
    pub fn steps_taken(&self) -> usize {
        self.step
    }
    pub fn v(&self) -> &SpectralField {
        &self.v
    }
    pub fn into_v(self) -> SpectralField {
        self.v
    }
    pub fn upsilon(&self) -> SpectralField {
        self.ou.state(self.pos)
    }
    /// `u = v + Υ` at the current time.
    pub fn u(&self) -> SpectralField {
        &self.v + &self.upsilon()
    }
    /// Solver steps left before the path runs out.
    pub fn remaining_steps(&self) -> usize {
        (self.ou.len() - 1 - self.pos) / self.stride
    }

    /// Ledger row of the current state without stepping.
    pub fn current_row(&self) -> Result<LedgerRow> {
        ledger_row(self.step, self.time(), &self.v, &self.upsilon(), self.config)
    }

    /// Advances one step and returns the ledger row of the state it started from.
    pub fn advance(&mut self) -> Result<LedgerRow> {
        if self.remaining_steps() == 0 {
            return Err(Error::OutOfWindow {
                time: self.time() + self.config.dt,
                start: self.ou.t0(),
                end: self.ou.t1(),
            });
        }
        let cfg = self.config;
        let p = &cfg.params;
        let ups = self.ou.state(self.pos);
        let w = &self.v + &ups;
        let nl = nonlinear_terms(&w, p.r, cfg.advection, cfg.forchheimer)?;
        let row = row_from(self.step, self.time(), &self.v, &ups, &nl.b, &nl.c, nl.phys.lp_pow(p.r + 1.0), cfg);
        let e = explicit_part(&nl.b, &nl.c, &ups, p, cfg.forcing.as_ref());
        let dt = cfg.dt;
        let mut next = self.v.axpy(dt, &e);
        for (z, s) in next.coeffs_mut().iter_mut().zip(&self.implicit) {
            *z *= *s;
        }
        reproject(&mut next);
        self.v = next;
        self.pos += self.stride;
        self.step += 1;
        let norm = h_norm_sq(&self.v).sqrt();
        if !(norm.is_finite() && norm <= self.guard_norm) {
            return Err(Error::Diverged { step: self.step, time: self.time(), norm });
        }
        Ok(row)
    }
}

/// Removes the rounding-level longitudinal part left by the linear update.
fn reproject(v: &mut SpectralField) {
    let dom = v.domain().clone();
    let d = dom.dim();
    let n = dom.len();
    let c = v.coeffs_mut();
    for &idx in dom.active_modes() {
        let k = dom.kvec(idx);
        let k2 = dom.k2(idx);
        let kdotu: num_complex::Complex64 = (0..d).map(|a| c[a * n + idx] * k[a]).sum();
        for a in 0..d {
            c[a * n + idx] -= kdotu * (k[a] / k2);
        }
    }
}
