use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::report::{normalized, sweep, sweep_many, InequalityReport, QUADRATURE_TOL};
use crate::error::{invalid, Result};
use crate::spectral::field::pow_abs;
use crate::spectral::{
    advection, forchheimer, gradient_sq_integral, h_norm, h_norm_sq, leray_project, lp_norm, lp_pow, operator_b,
    random_field, stokes, trilinear, v_norm, v_norm_sq, vprime_norm_sq, Domain, PhysicalParams, Regime,
    SpectralField,
};

const PAIR_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// Sweep sample: the standard random field with `‖u‖_H = 10^U(-1, 2)`.
pub fn sample_field(domain: &Arc<Domain>, seed: u64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 10f64.powf(rng.random_range(-1.0..2.0));
    random_field(domain, rng.next_u64(), h)
}

/// Sweep pair: independent, nearby, anti-aligned or aligned, chosen by the seed.
pub fn sample_pair(domain: &Arc<Domain>, seed: u64) -> (SpectralField, SpectralField) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ PAIR_SALT);
    let u1 = sample_field(domain, rng.next_u64());
    let u2 = match rng.random_range(0..4u32) {
        0 => sample_field(domain, rng.next_u64()),
        1 => {
            let eps = 10f64.powf(rng.random_range(-4.0..-1.0));
            let p = random_field(domain, rng.next_u64(), h_norm(&u1) * eps);
            &u1 + &p
        }
        2 => u1.scaled(-rng.random_range(0.1..2.0)),
        _ => u1.scaled(rng.random_range(0.0..2.0)),
    };
    (u1, u2)
}

/// Normalized defects of the structural identities for one triple.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdentityMargins {
    /// `|b(u,v,v)|`.
    pub b_vanishing: f64,
    /// `|b(u,v,w) + b(u,w,v)|`.
    pub b_antisymmetry: f64,
    /// `|⟨Au,u⟩ - ∫|∇u|²|`.
    pub stokes_energy: f64,
    /// `|⟨C(u),u⟩ - ‖u‖^{r+1}_{L^{r+1}}|`.
    pub c_energy: f64,
    /// `λ₁‖u‖²_H - ‖u‖²_V`, an inequality.
    pub poincare: f64,
}

pub const IDENTITY_NAMES: [&str; 5] = ["b_vanishing", "b_antisymmetry", "stokes_energy", "c_energy", "poincare"];

pub fn identity_margins(u: &SpectralField, v: &SpectralField, w: &SpectralField, r: f64) -> Result<IdentityMargins> {
    let (u4, v4, w4) = (lp_norm(u, 4.0), lp_norm(v, 4.0), lp_norm(w, 4.0));
    let (vv, wv) = (v_norm(v), v_norm(w));
    let b_vanishing = normalized(trilinear(u, v, v).abs(), u4 * vv * v4);
    let b_antisymmetry = normalized(
        (trilinear(u, v, w) + trilinear(u, w, v)).abs(),
        u4 * (vv * w4 + wv * v4),
    );
    let grad = gradient_sq_integral(u);
    let stokes_energy = normalized((stokes(u).inner(u) - grad).abs(), grad);
    let lr = lp_pow(u, r + 1.0);
    let c_energy = normalized((forchheimer(u, r)?.inner(u) - lr).abs(), lr);
    let vn = v_norm_sq(u);
    let poincare = normalized(u.domain().lambda1() * h_norm_sq(u) - vn, vn);
    Ok(IdentityMargins { b_vanishing, b_antisymmetry, stokes_energy, c_energy, poincare })
}

/// The identity suite on `seeds.len()` independent triples.
pub fn sweep_identities(domain: &Arc<Domain>, r: f64, seeds: &[u64]) -> Result<Vec<InequalityReport>> {
    sweep_many(&IDENTITY_NAMES, QUADRATURE_TOL, seeds, |s| {
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let u = sample_field(domain, rng.next_u64());
        let v = sample_field(domain, rng.next_u64());
        let w = sample_field(domain, rng.next_u64());
        let m = identity_margins(&u, &v, &w, r)?;
        Ok(vec![m.b_vanishing, m.b_antisymmetry, m.stokes_energy, m.c_energy, m.poincare])
    })
}

/// `‖u‖_{L⁴} ≤ 2^{1/4}‖u‖^{1/2}‖∇u‖^{1/2}` in 2D, `2^{1/2}‖u‖^{1/4}‖∇u‖^{3/4}` in 3D.
pub fn ladyzhenskaya_margin(u: &SpectralField) -> f64 {
    let (h, g) = (h_norm(u), v_norm(u));
    let rhs = if u.domain().dim() == 2 {
        2f64.powf(0.25) * (h * g).sqrt()
    } else {
        2f64.sqrt() * h.powf(0.25) * g.powf(0.75)
    };
    normalized(lp_norm(u, 4.0) - rhs, rhs)
}

/// `‖B(u,v)‖_{V'} ≤ ‖u‖_{L⁴}‖v‖_{L⁴}`.
pub fn b_dual_margin(u: &SpectralField, v: &SpectralField) -> f64 {
    let lhs = vprime_norm_sq(&leray_project(&advection(u, v))).sqrt();
    let rhs = lp_norm(u, 4.0) * lp_norm(v, 4.0);
    normalized(lhs - rhs, rhs)
}

/// `‖B(u)‖_{V'} ≤ ‖u‖^{(r+1)/(r-1)}_{L^{r+1}} ‖u‖^{(r-3)/(r-1)}_H` for `r > 3`.
pub fn b_interpolated_margin(u: &SpectralField, r: f64) -> Result<f64> {
    if !(r > 3.0) {
        return Err(invalid("r", format!("interpolated bound on B needs r > 3, got {r}")));
    }
    let lhs = vprime_norm_sq(&operator_b(u)).sqrt();
    let rhs = lp_norm(u, r + 1.0).powf((r + 1.0) / (r - 1.0)) * h_norm(u).powf((r - 3.0) / (r - 1.0));
    Ok(normalized(lhs - rhs, rhs))
}

/// `∫|u|^{r-1}|w|²` by grid quadrature.
fn weighted_sq(u: &SpectralField, w: &SpectralField, r: f64) -> f64 {
    let up = u.to_physical();
    let wm = w.to_physical().magnitude();
    let cell = u.domain().cell_volume();
    cell * up.magnitude().iter().zip(&wm).map(|(&a, &b)| pow_abs(a, r - 1.0) * b * b).sum::<f64>()
}

/// Margins of the monotonicity of `C` and of the matching bound on `‖u₁-u₂‖^{r+1}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CMonotonicity {
    /// `½(A₁+A₂) - ⟨C(u₁)-C(u₂), u₁-u₂⟩` with `Aᵢ = ‖|uᵢ|^{(r-1)/2}(u₁-u₂)‖²`.
    pub monotonicity: f64,
    /// `‖u₁-u₂‖^{r+1}_{L^{r+1}} - k(A₁+A₂)`, `k = 2^{r-2}` for `r > 2` and 1 otherwise.
    pub difference_bound: f64,
}

pub fn check_monotonicity_c(u1: &SpectralField, u2: &SpectralField, r: f64) -> Result<CMonotonicity> {
    let w = u1 - u2;
    let lhs = (&forchheimer(u1, r)? - &forchheimer(u2, r)?).inner(&w);
    let (a1, a2) = (weighted_sq(u1, &w, r), weighted_sq(u2, &w, r));
    let half = 0.5 * (a1 + a2);
    let k = if r > 2.0 { 2f64.powf(r - 2.0) } else { 1.0 };
    let lr = lp_pow(&w, r + 1.0);
    Ok(CMonotonicity {
        monotonicity: normalized(half - lhs, lhs.abs().max(half)),
        difference_bound: normalized(lr - k * (a1 + a2), lr.max(k * (a1 + a2))),
    })
}

pub fn sweep_monotonicity_c(domain: &Arc<Domain>, r: f64, seeds: &[u64]) -> Result<Vec<InequalityReport>> {
    sweep_many(&["c_monotonicity", "c_difference_bound"], QUADRATURE_TOL, seeds, |s| {
        let (u1, u2) = sample_pair(domain, s);
        let m = check_monotonicity_c(&u1, &u2, r)?;
        Ok(vec![m.monotonicity, m.difference_bound])
    })
}

/// Compensating coefficient `K` with `⟨G(u₁)-G(u₂), w⟩ + K‖w‖²_H ≥ 0` in the given regime.
pub fn g_compensator(params: &PhysicalParams, regime: Regime, u2: &SpectralField) -> f64 {
    let (mu, beta, r) = (params.mu, params.beta, params.r);
    match regime {
        Regime::TwoDimSubcritical => 27.0 / (32.0 * mu.powi(3)) * lp_pow(u2, 4.0),
        Regime::Supercritical => {
            (r - 3.0) / (2.0 * mu * (r - 1.0)) * (2.0 / (beta * mu * (r - 1.0))).powf(2.0 / (r - 3.0))
        }
        Regime::Critical3d => 0.0,
    }
}

/// `-(⟨G(u₁)-G(u₂), u₁-u₂⟩ + K‖u₁-u₂‖²_H)`, normalized; `G(u) = μAu + B(u) + αu + βC(u)`.
///
/// Inadmissible regimes are errors and are not evaluated.
pub fn check_local_monotonicity_g(u1: &SpectralField, u2: &SpectralField, params: &PhysicalParams) -> Result<f64> {
    let regime = params.regime(u1.domain().dim())?;
    let w = u1 - u2;
    let viscous = params.mu * stokes(&w).inner(&w);
    let darcy = params.alpha * h_norm_sq(&w);
    let conv = (&operator_b(u1) - &operator_b(u2)).inner(&w);
    let damp = params.beta * (&forchheimer(u1, params.r)? - &forchheimer(u2, params.r)?).inner(&w);
    let comp = g_compensator(params, regime, u2) * h_norm_sq(&w);
    let total = viscous + darcy + conv + damp + comp;
    let scale = viscous + darcy + conv.abs() + damp.abs() + comp;
    Ok(normalized(-total, scale))
}

pub fn sweep_local_monotonicity_g(
    domain: &Arc<Domain>,
    params: &PhysicalParams,
    seeds: &[u64],
) -> Result<InequalityReport> {
    params.regime(domain.dim())?;
    sweep("g_local_monotonicity", QUADRATURE_TOL, seeds, |s| {
        let (u1, u2) = sample_pair(domain, s);
        check_local_monotonicity_g(&u1, &u2, params)
    })
}

pub fn sweep_ladyzhenskaya(domain: &Arc<Domain>, seeds: &[u64]) -> Result<InequalityReport> {
    sweep("ladyzhenskaya", QUADRATURE_TOL, seeds, |s| Ok(ladyzhenskaya_margin(&sample_field(domain, s))))
}

pub fn sweep_b_dual(domain: &Arc<Domain>, seeds: &[u64]) -> Result<InequalityReport> {
    sweep("b_dual_bound", QUADRATURE_TOL, seeds, |s| {
        let (u, v) = sample_pair(domain, s);
        Ok(b_dual_margin(&u, &v))
    })
}

pub fn sweep_b_interpolated(domain: &Arc<Domain>, r: f64, seeds: &[u64]) -> Result<InequalityReport> {
    sweep("b_interpolated_bound", QUADRATURE_TOL, seeds, |s| b_interpolated_margin(&sample_field(domain, s), r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::spectral::{shear_field, DomainSpec};

    fn dom(d: usize) -> Arc<Domain> {
        Domain::new(DomainSpec::cube(d, if d == 2 { 16 } else { 8 })).unwrap()
    }

    #[test]
    fn samples_replay_from_seed() {
        let d = dom(2);
        let (a1, a2) = sample_pair(&d, 17);
        let (b1, b2) = sample_pair(&d, 17);
        assert_eq!(a1.coeffs(), b1.coeffs());
        assert_eq!(a2.coeffs(), b2.coeffs());
    }

    #[test]
    fn equal_fields_give_zero_margins() {
        let d = dom(2);
        let u = sample_field(&d, 3);
        let m = check_monotonicity_c(&u, &u, 3.0).unwrap();
        assert_eq!((m.monotonicity, m.difference_bound), (0.0, 0.0));
        let p = PhysicalParams { mu: 0.5, alpha: 0.1, beta: 1.0, r: 2.0, chi: 0.0 };
        assert_eq!(check_local_monotonicity_g(&u, &u, &p).unwrap(), 0.0);
    }

    #[test]
    fn c_at_r_one_pairs_to_the_h_norm() {
        let d = dom(2);
        let (u1, u2) = sample_pair(&d, 5);
        let w = &u1 - &u2;
        let lhs = (&forchheimer(&u1, 1.0).unwrap() - &forchheimer(&u2, 1.0).unwrap()).inner(&w);
        assert_eq!(lhs, w.inner(&w));
    }

    #[test]
    fn shear_mode_saturates_poincare() {
        let u = shear_field(&dom(2), 1, 2.0);
        let m = identity_margins(&u, &u, &u, 2.0).unwrap();
        assert!(m.poincare.abs() < 1e-14);
    }

    #[test]
    fn small_sweeps_pass() {
        let d = dom(2);
        let seeds: Vec<u64> = (0..12).collect();
        for rep in sweep_identities(&d, 2.5, &seeds).unwrap() {
            assert!(rep.passed(), "{rep:?}");
        }
        for rep in sweep_monotonicity_c(&d, 4.0, &seeds).unwrap() {
            assert!(rep.passed(), "{rep:?}");
        }
        assert!(sweep_ladyzhenskaya(&d, &seeds).unwrap().passed());
        assert!(sweep_b_dual(&d, &seeds).unwrap().passed());
        assert!(sweep_b_interpolated(&d, 4.0, &seeds).unwrap().passed());
        let p = PhysicalParams { mu: 0.5, alpha: 0.1, beta: 1.0, r: 2.0, chi: 0.0 };
        assert!(sweep_local_monotonicity_g(&d, &p, &seeds).unwrap().passed());
    }

    #[test]
    fn sweeps_replay_bit_exactly() {
        let d = dom(3);
        let seeds: Vec<u64> = (100..106).collect();
        let a = sweep_ladyzhenskaya(&d, &seeds).unwrap();
        let b = sweep_ladyzhenskaya(&d, &seeds[..3]).unwrap().merge(&sweep_ladyzhenskaya(&d, &seeds[3..]).unwrap());
        assert_eq!(a, b.unwrap());
    }

    #[test]
    fn inadmissible_regime_is_not_evaluated() {
        let d = dom(3);
        let u = sample_field(&d, 1);
        let p = PhysicalParams { mu: 0.5, alpha: 0.1, beta: 1.0, r: 2.0, chi: 0.0 };
        assert!(matches!(check_local_monotonicity_g(&u, &u, &p), Err(Error::Inadmissible(_))));
    }

    #[test]
    fn interpolated_bound_requires_r_above_three() {
        assert!(b_interpolated_margin(&sample_field(&dom(2), 1), 3.0).is_err());
    }

    #[test]
    fn supercritical_compensator_matches_closed_form() {
        let p = PhysicalParams { mu: 0.5, alpha: 0.1, beta: 2.0, r: 5.0, chi: 0.0 };
        let u = sample_field(&dom(2), 1);
        // (r-3)/(2μ(r-1)) · (2/(βμ(r-1)))^{2/(r-3)} = 0.5 · 0.5 = 0.25.
        assert!((g_compensator(&p, Regime::Supercritical, &u) - 0.25).abs() < 1e-15);
    }
}
