use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Result};
use crate::spectral::{Domain, SpectralField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quadrature {
    Cos,
    Sin,
}

/// One real Stokes eigenfunction `√(2/|Ω|)·e·cos(k·x)` or `√(2/|Ω|)·e·sin(k·x)`,
/// with `k` in the half-space whose first nonzero integer coordinate is positive.
#[derive(Clone, Copy, Debug)]
pub struct RealMode {
    pub index: usize,
    pub neg: usize,
    pub pol: [f64; 3],
    pub quad: Quadrature,
    pub k2: f64,
}

/// Discrete sums reported for a spectrum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSums {
    /// `Σ σ_m²` over real modes.
    pub sigma_sq: f64,
    /// `Σ σ_m² |k|^{-4δ}`.
    pub sigma_sq_smoothed: f64,
    /// Whether `s > d/2 + 2δ`, the exponent recorded as certifying the continuum assumption.
    pub certified: bool,
}

/// Diagonal power-law noise coloring `σ(k) = base_amp·|k|^{-s}` on the real Stokes basis.
#[derive(Clone, Debug)]
pub struct ColoringSpectrum {
    domain: Arc<Domain>,
    delta: f64,
    s: f64,
    base_amp: f64,
    modes: Vec<RealMode>,
    sigma: Vec<f64>,
}

fn in_upper_half(w: [i64; 3], d: usize) -> bool {
    for &c in &w[..d] {
        if c != 0 {
            return c > 0;
        }
    }
    false
}

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Orthonormal polarizations perpendicular to `k`.
fn polarizations(k: [f64; 3], d: usize) -> Vec<[f64; 3]> {
    if d == 2 {
        return vec![normalize([-k[1], k[0], 0.0])];
    }
    let kh = normalize(k);
    let axis = (0..3)
        .min_by(|&i, &j| kh[i].abs().partial_cmp(&kh[j].abs()).unwrap())
        .unwrap();
    let mut a = [0.0; 3];
    a[axis] = 1.0;
    let e1 = normalize(cross(kh, a));
    let e2 = cross(kh, e1);
    vec![e1, e2]
}

impl ColoringSpectrum {
    pub fn build(domain: &Arc<Domain>, delta: f64, base_amp: f64, s: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 0.5) {
            return Err(invalid("delta", format!("smoothing exponent must lie in (0, 1/2), got {delta}")));
        }
        if !(s.is_finite() && s > 0.0) {
            return Err(invalid("s", format!("decay exponent must be positive, got {s}")));
        }
        if !(base_amp.is_finite() && base_amp >= 0.0) {
            return Err(invalid("base_amp", format!("must be nonnegative, got {base_amp}")));
        }
        let d = domain.dim();
        let mut modes = Vec::new();
        let mut sigma = Vec::new();
        for &idx in domain.active_modes() {
            if !in_upper_half(domain.wavenumber(idx), d) {
                continue;
            }
            let k2 = domain.k2(idx);
            let amp = base_amp * k2.powf(-s / 2.0);
            for pol in polarizations(domain.kvec(idx), d) {
                for quad in [Quadrature::Cos, Quadrature::Sin] {
                    modes.push(RealMode { index: idx, neg: domain.neg(idx), pol, quad, k2 });
                    sigma.push(amp);
                }
            }
        }
        Ok(Self {
            domain: domain.clone(),
            delta,
            s,
            base_amp,
            modes,
            sigma,
        })
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn s(&self) -> f64 {
        self.s
    }
    pub fn base_amp(&self) -> f64 {
        self.base_amp
    }
    pub fn modes(&self) -> &[RealMode] {
        &self.modes
    }
    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }
    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    /// Amplitude of the complex grid mode `idx`; zero off the active set.
    pub fn sigma_at(&self, idx: usize) -> f64 {
        if !self.domain.is_active(idx) {
            return 0.0;
        }
        self.base_amp * self.domain.k2(idx).powf(-self.s / 2.0)
    }

    pub fn sums(&self) -> SpectrumSums {
        let four_delta = 4.0 * self.delta;
        SpectrumSums {
            sigma_sq: self.sigma.iter().map(|x| x * x).sum(),
            sigma_sq_smoothed: self
                .sigma
                .iter()
                .zip(&self.modes)
                .map(|(x, m)| x * x * m.k2.powf(-four_delta / 2.0))
                .sum(),
            certified: self.s > self.domain.dim() as f64 / 2.0 + 2.0 * self.delta,
        }
    }

    /// OU decay rate `γ_m = μ|k|² + χ` per real mode.
    pub fn gammas(&self, mu: f64, chi: f64) -> Vec<f64> {
        self.modes.iter().map(|m| mu * m.k2 + chi).collect()
    }

    /// Stationary OU variance `σ_m² / (2γ_m)` per real mode.
    pub fn stationary_variances(&self, mu: f64, chi: f64) -> Vec<f64> {
        self.sigma
            .iter()
            .zip(self.gammas(mu, chi))
            .map(|(s, g)| s * s / (2.0 * g))
            .collect()
    }

    /// `E‖Υ‖²_H` for the stationary OU process.
    pub fn expected_h_norm_sq(&self, mu: f64, chi: f64) -> f64 {
        self.stationary_variances(mu, chi).iter().sum()
    }

    /// `E‖Υ‖^p_{L^p}` for the stationary OU process.
    ///
    /// Exact on a cubic box, where `Υ(x)` is an isotropic Gaussian vector with
    /// `E|Υ(x)|² = Σ_m var_m / |Ω|` at every point.
    pub fn expected_lp_moment(&self, mu: f64, chi: f64, p: f64) -> f64 {
        let d = self.domain.dim() as f64;
        let vol = self.domain.volume();
        let total: f64 = self.expected_h_norm_sq(mu, chi) / vol;
        if total == 0.0 {
            return 0.0;
        }
        let per_comp = total / d;
        let log_moment = 0.5 * p * (2.0 * per_comp).ln() + ln_gamma((d + p) / 2.0) - ln_gamma(d / 2.0);
        vol * log_moment.exp()
    }

    /// Field with real-mode amplitudes `amps`.
    pub fn synthesize(&self, amps: &[f64]) -> SpectralField {
        assert_eq!(amps.len(), self.modes.len(), "one amplitude per real mode");
        let d = self.domain.dim();
        let n = self.domain.len();
        let scale = 0.5 * (2.0 / self.domain.volume()).sqrt();
        let mut coeffs = vec![Complex64::default(); d * n];
        for (m, &a) in self.modes.iter().zip(amps) {
            // cos ↦ (1/2, 1/2), sin ↦ (-i/2, i/2) on (k, -k).
            let z = match m.quad {
                Quadrature::Cos => Complex64::new(a * scale, 0.0),
                Quadrature::Sin => Complex64::new(0.0, -a * scale),
            };
            for c in 0..d {
                coeffs[c * n + m.index] += z * m.pol[c];
                coeffs[c * n + m.neg] += z.conj() * m.pol[c];
            }
        }
        SpectralField::from_coeffs_unchecked(self.domain.clone(), coeffs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{h_norm_sq, DomainSpec};

    #[test]
    fn real_modes_are_orthonormal() {
        for (dim, n) in [(2, 8), (3, 8)] {
            let dom = Domain::new(DomainSpec::cube(dim, n)).unwrap();
            let sp = ColoringSpectrum::build(&dom, 0.25, 1.0, 1.0).unwrap();
            // Each active k contributes (d - 1) polarizations × cos/sin once across ±k.
            assert_eq!(sp.n_modes(), dom.active_modes().len() * (dim - 1));
            for i in [0, 1, 2, sp.n_modes() - 1] {
                let mut a = vec![0.0; sp.n_modes()];
                a[i] = 1.0;
                let u = sp.synthesize(&a);
                assert!((h_norm_sq(&u) - 1.0).abs() < 1e-13);
                assert!(u.max_divergence_ratio() < 1e-13);
                assert_eq!(u.max_hermitian_defect(), 0.0);
                for j in [0, 1, 3] {
                    if j == i {
                        continue;
                    }
                    let mut b = vec![0.0; sp.n_modes()];
                    b[j] = 1.0;
                    assert!(u.inner(&sp.synthesize(&b)).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn zero_amplitude_gives_zero_spectrum() {
        let dom = Domain::new(DomainSpec::cube(2, 8)).unwrap();
        let sp = ColoringSpectrum::build(&dom, 0.25, 0.0, 1.0).unwrap();
        assert!(sp.sigma().iter().all(|&x| x == 0.0));
        assert_eq!(sp.sums().sigma_sq, 0.0);
    }

    #[test]
    fn steep_decay_concentrates_on_the_first_shell() {
        let dom = Domain::new(DomainSpec::cube(2, 16)).unwrap();
        let sp = ColoringSpectrum::build(&dom, 0.25, 1.0, 10.0).unwrap();
        // |k| = 1 shell: 2 half-space wavevectors × 2 quadratures.
        let shell = 4.0;
        let sums = sp.sums();
        assert!((sums.sigma_sq - shell).abs() / shell < 2e-3);
        assert!((sums.sigma_sq_smoothed - shell).abs() / shell < 2e-3);
    }

    #[test]
    fn sigma_is_even_and_vanishes_at_zero() {
        let dom = Domain::new(DomainSpec::cube(3, 8)).unwrap();
        let sp = ColoringSpectrum::build(&dom, 0.1, 2.0, 1.5).unwrap();
        assert_eq!(sp.sigma_at(0), 0.0);
        for idx in 0..dom.len() {
            assert_eq!(sp.sigma_at(idx), sp.sigma_at(dom.neg(idx)));
        }
    }

    #[test]
    fn rejects_delta_outside_open_half_interval() {
        let dom = Domain::new(DomainSpec::cube(2, 8)).unwrap();
        assert!(ColoringSpectrum::build(&dom, 0.5, 1.0, 1.0).is_err());
        assert!(ColoringSpectrum::build(&dom, 0.0, 1.0, 1.0).is_err());
        assert!(ColoringSpectrum::build(&dom, 0.2, 1.0, 0.0).is_err());
    }

    #[test]
    fn stationary_variance_decreases_in_chi() {
        let dom = Domain::new(DomainSpec::cube(2, 8)).unwrap();
        let sp = ColoringSpectrum::build(&dom, 0.25, 1.0, 1.0).unwrap();
        let a = sp.stationary_variances(0.5, 0.0);
        let b = sp.stationary_variances(0.5, 0.5);
        assert!(a.iter().zip(&b).all(|(x, y)| y < x));
    }

    #[test]
    fn gaussian_moment_formula_reduces_to_known_cases() {
        let dom = Domain::new(DomainSpec::cube(2, 8)).unwrap();
        let sp = ColoringSpectrum::build(&dom, 0.25, 1.0, 1.0).unwrap();
        let h = sp.expected_h_norm_sq(0.5, 0.0);
        assert!((sp.expected_lp_moment(0.5, 0.0, 2.0) - h).abs() < 1e-12 * h);
        // E|Z|⁴ = s⁴(1 + 2/d) for an isotropic d-vector with E|Z|² = s².
        let s2 = h / dom.volume();
        let l4 = dom.volume() * s2 * s2 * 2.0;
        assert!((sp.expected_lp_moment(0.5, 0.0, 4.0) - l4).abs() < 1e-12 * l4);
    }
}
