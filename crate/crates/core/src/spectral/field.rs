use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use num_complex::Complex64;

use super::domain::Domain;
use crate::error::{Error, Result};

/// Inverse-transform several Hermitian scalar grids, two per complex FFT.
pub(crate) fn inverse_many(domain: &Domain, comps: &[&[Complex64]]) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(comps.len());
    for pair in comps.chunks(2) {
        if let [a, b] = pair {
            let (x, y) = domain.inverse_real_pair(a, b);
            out.push(x);
            out.push(y);
        } else {
            out.push(domain.inverse_real(pair[0]));
        }
    }
    out
}

/// Forward-transform several real scalar grids, two per complex FFT.
pub(crate) fn forward_many(domain: &Domain, comps: &[&[f64]]) -> Vec<Vec<Complex64>> {
    let mut out = Vec::with_capacity(comps.len());
    for pair in comps.chunks(2) {
        if let [a, b] = pair {
            let (x, y) = domain.forward_real_pair(a, b);
            out.push(x);
            out.push(y);
        } else {
            out.push(domain.forward_real(pair[0]));
        }
    }
    out
}

/// Unconstrained vector coefficients, e.g. the transform of arbitrary grid data.
#[derive(Clone, Debug)]
pub struct RawCoeffs {
    domain: Arc<Domain>,
    coeffs: Vec<Complex64>,
}

impl RawCoeffs {
    pub fn new(domain: Arc<Domain>, coeffs: Vec<Complex64>) -> Result<Self> {
        let expected = domain.dim() * domain.len();
        if coeffs.len() != expected {
            return Err(Error::SizeMismatch { expected, got: coeffs.len() });
        }
        Ok(Self { domain, coeffs })
    }
    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }
    pub fn component(&self, c: usize) -> &[Complex64] {
        let n = self.domain.len();
        &self.coeffs[c * n..(c + 1) * n]
    }
}

/// Leray projection onto dealiased, mean-zero, divergence-free real fields.
///
/// Coefficients are first made Hermitian, so the result is the transform of a
/// real field. Both steps are per-mode and idempotent.
pub fn leray_project(raw: &RawCoeffs) -> SpectralField {
    let domain = &raw.domain;
    let d = domain.dim();
    let n = domain.len();
    let mut out = vec![Complex64::default(); d * n];
    let half = 0.5;
    for &idx in domain.active_modes() {
        let j = domain.neg(idx);
        let k = domain.kvec(idx);
        let k2 = domain.k2(idx);
        let mut u = [Complex64::default(); 3];
        for c in 0..d {
            u[c] = (raw.coeffs[c * n + idx] + raw.coeffs[c * n + j].conj()) * half;
        }
        let kdotu: Complex64 = (0..d).map(|c| u[c] * k[c]).sum();
        for c in 0..d {
            out[c * n + idx] = u[c] - kdotu * (k[c] / k2);
        }
    }
    SpectralField {
        domain: domain.clone(),
        coeffs: out,
    }
}

/// Real, mean-zero, divergence-free, dealiased velocity field in Fourier form.
#[derive(Clone, Debug)]
pub struct SpectralField {
    domain: Arc<Domain>,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(domain: Arc<Domain>) -> Self {
        let len = domain.dim() * domain.len();
        Self {
            domain,
            coeffs: vec![Complex64::default(); len],
        }
    }

    /// Projects arbitrary coefficients; see [`leray_project`].
    pub fn from_raw(raw: &RawCoeffs) -> Self {
        leray_project(raw)
    }

    /// Projects the transform of real grid values.
    pub fn from_physical(phys: &PhysicalField) -> Self {
        leray_project(&phys.to_raw())
    }

    /// Caller guarantees the invariants hold (linear combinations of admissible fields).
    pub(crate) fn from_coeffs_unchecked(domain: Arc<Domain>, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), domain.dim() * domain.len());
        Self { domain, coeffs }
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }
    pub(crate) fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }
    pub fn component(&self, c: usize) -> &[Complex64] {
        let n = self.domain.len();
        &self.coeffs[c * n..(c + 1) * n]
    }
    pub fn to_raw(&self) -> RawCoeffs {
        RawCoeffs {
            domain: self.domain.clone(),
            coeffs: self.coeffs.clone(),
        }
    }

    pub fn same_domain(&self, other: &SpectralField) -> bool {
        Arc::ptr_eq(&self.domain, &other.domain) || *self.domain == *other.domain
    }

    fn check(&self, other: &SpectralField) {
        assert!(self.same_domain(other), "operands live on different domains");
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &SpectralField) -> SpectralField {
        self.check(other);
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(x, y)| x + y * a)
            .collect();
        Self::from_coeffs_unchecked(self.domain.clone(), coeffs)
    }

    pub fn scaled(&self, a: f64) -> SpectralField {
        Self::from_coeffs_unchecked(self.domain.clone(), self.coeffs.iter().map(|x| x * a).collect())
    }

    /// Real `L²(Ω)` inner product.
    pub fn inner(&self, other: &SpectralField) -> f64 {
        self.check(other);
        let s: f64 = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(x, y)| x.re * y.re + x.im * y.im)
            .sum();
        self.domain.volume() * s
    }

    pub fn to_physical(&self) -> PhysicalField {
        let d = self.domain.dim();
        let comps: Vec<&[Complex64]> = (0..d).map(|c| self.component(c)).collect();
        let values = inverse_many(&self.domain, &comps).concat();
        PhysicalField {
            domain: self.domain.clone(),
            values,
        }
    }

    /// Largest `|k·û(k)| / |û(k)|` over nonzero modes.
    pub fn max_divergence_ratio(&self) -> f64 {
        let d = self.domain.dim();
        let n = self.domain.len();
        let mut worst: f64 = 0.0;
        for idx in 0..n {
            let k = self.domain.kvec(idx);
            let amp: f64 = (0..d).map(|c| self.coeffs[c * n + idx].norm_sqr()).sum::<f64>().sqrt();
            if amp == 0.0 {
                continue;
            }
            let div: Complex64 = (0..d).map(|c| self.coeffs[c * n + idx] * k[c]).sum();
            worst = worst.max(div.norm() / amp);
        }
        worst
    }

    /// Largest `|û(k) - conj(û(-k))|`.
    pub fn max_hermitian_defect(&self) -> f64 {
        let n = self.domain.len();
        let mut worst: f64 = 0.0;
        for c in 0..self.domain.dim() {
            for idx in 0..n {
                let j = self.domain.neg(idx);
                worst = worst.max((self.coeffs[c * n + idx] - self.coeffs[c * n + j].conj()).norm());
            }
        }
        worst
    }

    /// Largest coefficient modulus outside the active set.
    pub fn max_inactive_coeff(&self) -> f64 {
        let n = self.domain.len();
        let mut worst: f64 = 0.0;
        for c in 0..self.domain.dim() {
            for idx in 0..n {
                if !self.domain.is_active(idx) {
                    worst = worst.max(self.coeffs[c * n + idx].norm());
                }
            }
        }
        worst
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        self.axpy(1.0, rhs)
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        self.axpy(-1.0, rhs)
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, a: f64) -> SpectralField {
        self.scaled(a)
    }
}

/// Real vector field sampled on the grid, component-major.
#[derive(Clone, Debug)]
pub struct PhysicalField {
    domain: Arc<Domain>,
    values: Vec<f64>,
}

impl PhysicalField {
    pub fn from_values(domain: Arc<Domain>, values: Vec<f64>) -> Result<Self> {
        let expected = domain.dim() * domain.len();
        if values.len() != expected {
            return Err(Error::SizeMismatch { expected, got: values.len() });
        }
        Ok(Self { domain, values })
    }

    /// Samples `f(x)` at every grid point.
    pub fn from_fn(domain: Arc<Domain>, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let d = domain.dim();
        let n = domain.len();
        let mut values = vec![0.0; d * n];
        for idx in 0..n {
            let u = f(domain.point(idx));
            for c in 0..d {
                values[c * n + idx] = u[c];
            }
        }
        Self { domain, values }
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn component(&self, c: usize) -> &[f64] {
        let n = self.domain.len();
        &self.values[c * n..(c + 1) * n]
    }

    /// `|u(x)|` at every grid point.
    pub fn magnitude(&self) -> Vec<f64> {
        let d = self.domain.dim();
        let n = self.domain.len();
        (0..n)
            .map(|i| (0..d).map(|c| self.values[c * n + i].powi(2)).sum::<f64>().sqrt())
            .collect()
    }

    /// `∫|u|^p` by grid quadrature.
    pub fn lp_pow(&self, p: f64) -> f64 {
        let w = self.domain.cell_volume();
        w * self.magnitude().iter().map(|m| pow_abs(*m, p)).sum::<f64>()
    }

    pub fn lp_norm(&self, p: f64) -> f64 {
        self.lp_pow(p).powf(1.0 / p)
    }

    /// Pointwise `u·v` integrated by grid quadrature.
    pub fn dot_integral(&self, other: &PhysicalField) -> f64 {
        self.domain.cell_volume() * self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn to_raw(&self) -> RawCoeffs {
        let d = self.domain.dim();
        let comps: Vec<&[f64]> = (0..d).map(|c| self.component(c)).collect();
        RawCoeffs {
            domain: self.domain.clone(),
            coeffs: forward_many(&self.domain, &comps).concat(),
        }
    }
}

/// `m^p` for `m ≥ 0` via `exp(p ln m)`, with `0^p = 0`.
pub(crate) fn pow_abs(m: f64, p: f64) -> f64 {
    if m == 0.0 {
        0.0
    } else if p == 2.0 {
        m * m
    } else if p == 4.0 {
        (m * m) * (m * m)
    } else {
        (p * m.ln()).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::domain::DomainSpec;
    use crate::spectral::sample::random_field;

    #[test]
    fn transform_round_trip_is_identity_on_admissible_fields() {
        for (dim, n) in [(2, 32), (3, 16)] {
            let dom = Domain::new(DomainSpec::cube(dim, n)).unwrap();
            let u = random_field(&dom, 7, 1.0);
            let back = SpectralField::from_physical(&u.to_physical());
            let err = (&back - &u).coeffs().iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(err < 1e-12, "dim {dim}: {err}");
        }
    }

    #[test]
    fn projection_is_idempotent_and_orthogonal() {
        let dom = Domain::new(DomainSpec::cube(2, 16)).unwrap();
        let values: Vec<f64> = (0..2 * dom.len()).map(|i| ((i * 2654435761) % 1000) as f64 / 500.0 - 1.0).collect();
        let phys = PhysicalField::from_values(dom.clone(), values).unwrap();
        let raw = phys.to_raw();
        let p = leray_project(&raw);
        let pp = leray_project(&p.to_raw());
        let idem = (&pp - &p).coeffs().iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(idem < 1e-15);
        // <Pu, u - Pu> over all modes.
        let resid: f64 = raw
            .coeffs()
            .iter()
            .zip(p.coeffs())
            .map(|(u, pu)| {
                let r = u - pu;
                pu.re * r.re + pu.im * r.im
            })
            .sum();
        assert!(resid.abs() < 1e-14);
        assert!(p.max_divergence_ratio() < 1e-14);
        assert!(p.max_hermitian_defect() == 0.0);
        assert!(p.max_inactive_coeff() == 0.0);
    }

    #[test]
    fn size_mismatch_is_an_error() {
        let dom = Domain::new(DomainSpec::cube(2, 8)).unwrap();
        assert!(matches!(
            PhysicalField::from_values(dom.clone(), vec![0.0; 5]),
            Err(Error::SizeMismatch { expected: 128, got: 5 })
        ));
        assert!(RawCoeffs::new(dom, vec![Complex64::default(); 3]).is_err());
    }

    #[test]
    fn pow_abs_matches_powf() {
        for &m in &[0.3, 1.0, 2.7] {
            for &p in &[1.0, 2.0, 2.5, 4.0, 5.3] {
                assert!((pow_abs(m, p) - f64::powf(m, p)).abs() < 1e-13 * f64::powf(m, p));
            }
        }
        assert_eq!(pow_abs(0.0, 3.0), 0.0);
    }
}
