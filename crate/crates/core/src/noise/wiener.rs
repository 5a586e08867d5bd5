use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::coloring::ColoringSpectrum;
use crate::error::{invalid, Error, Result};

/// Default length of history before time zero at which OU paths are initialized.
pub const DEFAULT_HISTORY: f64 = 64.0;

const GRID_TOL: f64 = 1e-9;

/// Two-sided, counter-based Gaussian source indexed by signed step number.
///
/// The draws for absolute step `a` come from their own ChaCha stream, so they
/// are a pure function of `(seed, a, mode)`. `offset` is the absolute index of
/// relative step zero; shifting the path only moves `offset`. `anchor` is the
/// absolute index at which OU paths draw their stationary initial state, and
/// it is left untouched by shifts so shifted paths replay identical states.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WienerPath {
    seed: u64,
    dt: f64,
    offset: i64,
    anchor: i64,
}

fn zigzag(a: i64) -> u64 {
    ((a << 1) ^ (a >> 63)) as u64
}

/// Converts `t` to a step count, rejecting values off the `dt` grid.
pub(crate) fn steps_of(t: f64, dt: f64, what: &'static str) -> Result<i64> {
    let x = t / dt;
    let n = x.round();
    if !x.is_finite() || (x - n).abs() > GRID_TOL * n.abs().max(1.0) {
        return Err(invalid(what, format!("{t} is not an integer multiple of dt = {dt}")));
    }
    Ok(n as i64)
}

impl WienerPath {
    pub fn new(seed: u64, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(invalid("dt", format!("must be positive, got {dt}")));
        }
        let anchor = -(DEFAULT_HISTORY / dt).ceil() as i64;
        Ok(Self { seed, dt, offset: 0, anchor })
    }

    /// Moves the anchor to relative time `t` (rounded down to the grid).
    pub fn with_anchor_time(mut self, t: f64) -> Self {
        self.anchor = self.offset + (t / self.dt).floor() as i64;
        self
    }

    /// Ensures the anchor lies at or before relative time `t`.
    pub fn with_history_to(self, t: f64) -> Self {
        if self.anchor_time() <= t {
            self
        } else {
            self.with_anchor_time(t)
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn dt(&self) -> f64 {
        self.dt
    }
    pub fn offset(&self) -> i64 {
        self.offset
    }
    /// Relative index of the anchor.
    pub fn anchor_index(&self) -> i64 {
        self.anchor - self.offset
    }
    pub fn anchor_time(&self) -> f64 {
        self.anchor_index() as f64 * self.dt
    }

    /// `θ_s`: the path seen from time `s`, so that `(θ_s ω)(t) = ω(t + s) - ω(s)`.
    pub fn shift(&self, s: f64) -> Result<Self> {
        let m = steps_of(s, self.dt, "shift")?;
        Ok(Self { offset: self.offset + m, ..*self })
    }

    pub fn index_of(&self, t: f64) -> Result<i64> {
        steps_of(t, self.dt, "time")
    }

    fn draws(&self, stream: u64, count: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        (0..count).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    /// Standard normals driving the step from relative index `n` to `n + 1`.
    pub fn gaussians(&self, n: i64, count: usize) -> Vec<f64> {
        self.draws(zigzag(self.offset + n).wrapping_mul(2), count)
    }

    /// Wiener increments `W(t_{n+1}) - W(t_n)`, each with variance `dt`.
    pub fn increments(&self, n: i64, count: usize) -> Vec<f64> {
        let s = self.dt.sqrt();
        self.gaussians(n, count).into_iter().map(|z| z * s).collect()
    }

    /// Standard normals for the stationary initial state at the anchor.
    pub(crate) fn anchor_gaussians(&self, count: usize) -> Vec<f64> {
        self.draws(zigzag(self.anchor).wrapping_mul(2) | 1, count)
    }
}

/// A noise realization `ω`: the coloring plus the underlying Gaussian source.
#[derive(Clone, Debug)]
pub struct Omega {
    pub spectrum: Arc<ColoringSpectrum>,
    pub wiener: WienerPath,
}

impl Omega {
    pub fn new(spectrum: Arc<ColoringSpectrum>, wiener: WienerPath) -> Self {
        Self { spectrum, wiener }
    }

    pub fn shift(&self, s: f64) -> Result<Self> {
        Ok(Self {
            spectrum: self.spectrum.clone(),
            wiener: self.wiener.shift(s)?,
        })
    }

    pub fn with_history_to(&self, t: f64) -> Self {
        Self {
            spectrum: self.spectrum.clone(),
            wiener: self.wiener.with_history_to(t),
        }
    }

    pub fn same_source(&self, other: &Omega) -> Result<()> {
        if self.wiener.seed != other.wiener.seed || self.wiener.dt != other.wiener.dt {
            return Err(Error::Config("noise realizations use different seeds or steps".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_are_pure_functions_of_seed_and_index() {
        let w = WienerPath::new(42, 0.01).unwrap();
        assert_eq!(w.gaussians(-5, 8), w.gaussians(-5, 8));
        assert_ne!(w.gaussians(-5, 8), w.gaussians(5, 8));
        assert_ne!(w.gaussians(0, 8), WienerPath::new(43, 0.01).unwrap().gaussians(0, 8));
        assert_ne!(w.gaussians(0, 8), w.anchor_gaussians(8));
        // Prefixes agree regardless of how many draws are requested.
        assert_eq!(w.gaussians(3, 4)[..], w.gaussians(3, 10)[..4]);
    }

    #[test]
    fn shift_reindexes_draws() {
        let w = WienerPath::new(7, 0.01).unwrap();
        let s = w.shift(0.17).unwrap();
        assert_eq!(s.gaussians(0, 5), w.gaussians(17, 5));
        assert_eq!(s.anchor_gaussians(5), w.anchor_gaussians(5));
        assert_eq!(s.anchor_index(), w.anchor_index() - 17);
        let back = s.shift(-0.17).unwrap();
        assert_eq!(back, w);
        assert_eq!(w.shift(0.0).unwrap(), w);
        assert_eq!(w.shift(0.05).unwrap().shift(0.12).unwrap(), s);
    }

    #[test]
    fn off_grid_shift_is_rejected() {
        let w = WienerPath::new(7, 0.01).unwrap();
        assert!(w.shift(0.015).is_err());
        assert!(WienerPath::new(1, 0.0).is_err());
    }

    #[test]
    fn zigzag_is_injective_near_zero() {
        let v: Vec<u64> = (-4..=4).map(zigzag).collect();
        let mut s = v.clone();
        s.sort();
        s.dedup();
        assert_eq!(s.len(), v.len());
    }
}
