use std::sync::Arc;

use num_complex::Complex64;

use super::domain::Domain;
use super::field::{forward_many, inverse_many, leray_project, pow_abs, PhysicalField, RawCoeffs, SpectralField};
use crate::error::{invalid, Result};

/// Stokes operator `Au = -PΔu`, i.e. multiplication by `|k|²`.
pub fn stokes(u: &SpectralField) -> SpectralField {
    let dom = u.domain();
    let n = dom.len();
    let coeffs = u
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, z)| z * dom.k2(i % n))
        .collect();
    SpectralField::from_coeffs_unchecked(dom.clone(), coeffs)
}

/// Grid values of `∂_i v_j`, indexed `[j * dim + i]`.
fn gradient(v: &SpectralField) -> Vec<Vec<f64>> {
    let dom = v.domain();
    let d = dom.dim();
    let n = dom.len();
    let mut derivs: Vec<Vec<Complex64>> = Vec::with_capacity(d * d);
    for j in 0..d {
        let comp = v.component(j);
        for i in 0..d {
            derivs.push((0..n).map(|idx| comp[idx] * Complex64::new(0.0, dom.kvec(idx)[i])).collect());
        }
    }
    let refs: Vec<&[Complex64]> = derivs.iter().map(|x| x.as_slice()).collect();
    inverse_many(dom, &refs)
}

/// `∫ |∇u|²` by grid quadrature of the physical-space gradient.
pub fn gradient_sq_integral(u: &SpectralField) -> f64 {
    let g = gradient(u);
    u.domain().cell_volume() * g.iter().map(|c| c.iter().map(|x| x * x).sum::<f64>()).sum::<f64>()
}

/// Grid values of `(u·∇)v`, component-major.
fn advection_grid(u: &PhysicalField, v: &SpectralField) -> Vec<Vec<f64>> {
    let dom = v.domain();
    let d = dom.dim();
    let n = dom.len();
    let grad = gradient(v);
    (0..d)
        .map(|j| {
            let mut out = vec![0.0; n];
            for i in 0..d {
                let ui = u.component(i);
                let g = &grad[j * d + i];
                for p in 0..n {
                    out[p] += ui[p] * g[p];
                }
            }
            out
        })
        .collect()
}

/// Unprojected transform of `(u·∇)v`.
pub fn advection(u: &SpectralField, v: &SpectralField) -> RawCoeffs {
    assert!(u.same_domain(v), "operands live on different domains");
    let grid = advection_grid(&u.to_physical(), v);
    to_raw(v.domain(), &grid)
}

fn to_raw(dom: &Arc<Domain>, grid: &[Vec<f64>]) -> RawCoeffs {
    let refs: Vec<&[f64]> = grid.iter().map(|x| x.as_slice()).collect();
    RawCoeffs::new(dom.clone(), forward_many(dom, &refs).concat()).expect("sized by construction")
}

/// `b(u,v,w) = ∫ (u·∇)v · w`, by grid quadrature.
///
/// Exact for admissible fields: the integrand's frequencies stay below the grid
/// aliasing threshold under the two-thirds rule.
pub fn trilinear(u: &SpectralField, v: &SpectralField, w: &SpectralField) -> f64 {
    assert!(u.same_domain(v) && u.same_domain(w), "operands live on different domains");
    let dom = u.domain();
    let grid = advection_grid(&u.to_physical(), v);
    let wp = w.to_physical();
    let s: f64 = grid
        .iter()
        .enumerate()
        .map(|(c, g)| g.iter().zip(wp.component(c)).map(|(a, b)| a * b).sum::<f64>())
        .sum();
    dom.cell_volume() * s
}

/// `B(u) = P((u·∇)u)`, dealiased.
pub fn operator_b(u: &SpectralField) -> SpectralField {
    leray_project(&advection(u, u))
}

fn check_r(r: f64) -> Result<()> {
    if !(r.is_finite() && r >= 1.0) {
        return Err(invalid("r", format!("absorption exponent must be >= 1, got {r}")));
    }
    Ok(())
}

/// Grid values of `|u|^{r-1} u`.
fn forchheimer_grid(u: &PhysicalField, r: f64) -> Vec<Vec<f64>> {
    let d = u.domain().dim();
    let factor: Vec<f64> = u.magnitude().iter().map(|&m| pow_abs(m, r - 1.0)).collect();
    (0..d)
        .map(|c| u.component(c).iter().zip(&factor).map(|(x, f)| x * f).collect())
        .collect()
}

/// `C(u) = P(|u|^{r-1} u)`, dealiased; `C(u) = u` when `r = 1`.
pub fn forchheimer(u: &SpectralField, r: f64) -> Result<SpectralField> {
    check_r(r)?;
    if r == 1.0 {
        return Ok(u.clone());
    }
    let grid = forchheimer_grid(&u.to_physical(), r);
    Ok(leray_project(&to_raw(u.domain(), &grid)))
}

/// `B(w)`, `C(w)` and the grid values of `w`, sharing one set of transforms.
#[derive(Clone, Debug)]
pub struct NonlinearTerms {
    pub b: SpectralField,
    pub c: SpectralField,
    pub phys: PhysicalField,
}

pub fn nonlinear_terms(w: &SpectralField, r: f64, with_b: bool, with_c: bool) -> Result<NonlinearTerms> {
    check_r(r)?;
    let dom = w.domain();
    let phys = w.to_physical();
    let b = if with_b {
        leray_project(&to_raw(dom, &advection_grid(&phys, w)))
    } else {
        SpectralField::zeros(dom.clone())
    };
    let c = if !with_c {
        SpectralField::zeros(dom.clone())
    } else if r == 1.0 {
        w.clone()
    } else {
        leray_project(&to_raw(dom, &forchheimer_grid(&phys, r)))
    };
    Ok(NonlinearTerms { b, c, phys })
}
