use crate::error::{invalid, Result};
use crate::spectral::{PhysicalParams, SpectralField};

/// Default factor by which `‖v‖_H` may exceed its initial scale before a run is aborted.
pub const DEFAULT_GUARD: f64 = 1e6;

/// Settings for the IMEX-Euler integration of the transformed system.
#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub params: PhysicalParams,
    /// Solver step; must be a positive integer multiple of the noise step.
    pub dt: f64,
    /// Store every `store_every`-th state; the initial and final states are always kept.
    pub store_every: usize,
    /// Time-independent forcing; `None` means `f = 0`.
    pub forcing: Option<SpectralField>,
    pub guard: f64,
    /// Switches for isolating terms in tests; both on for the physical system.
    pub advection: bool,
    pub forchheimer: bool,
}

impl SolverConfig {
    pub fn new(params: PhysicalParams, dt: f64) -> Self {
        Self {
            params,
            dt,
            store_every: 1,
            forcing: None,
            guard: DEFAULT_GUARD,
            advection: true,
            forchheimer: true,
        }
    }

    pub fn with_forcing(mut self, f: SpectralField) -> Self {
        self.forcing = Some(f);
        self
    }

    pub fn with_store_every(mut self, n: usize) -> Self {
        self.store_every = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(invalid("dt", format!("must be positive, got {}", self.dt)));
        }
        if self.store_every == 0 {
            return Err(invalid("store_every", "must be at least 1"));
        }
        if !(self.guard > 1.0) {
            return Err(invalid("guard", format!("must exceed 1, got {}", self.guard)));
        }
        Ok(())
    }
}
