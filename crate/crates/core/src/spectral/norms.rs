use super::field::SpectralField;

/// `‖u‖²_H = |Ω| Σ |û(k)|²`.
pub fn h_norm_sq(u: &SpectralField) -> f64 {
    u.domain().volume() * u.coeffs().iter().map(|z| z.norm_sqr()).sum::<f64>()
}

pub fn h_norm(u: &SpectralField) -> f64 {
    h_norm_sq(u).sqrt()
}

/// `‖u‖²_V = |Ω| Σ |k|² |û(k)|²`.
pub fn v_norm_sq(u: &SpectralField) -> f64 {
    weighted(u, |k2| k2)
}

pub fn v_norm(u: &SpectralField) -> f64 {
    v_norm_sq(u).sqrt()
}

/// `‖f‖²_{V'} = |Ω| Σ |f̂(k)|² / |k|²` over nonzero modes.
pub fn vprime_norm_sq(u: &SpectralField) -> f64 {
    weighted(u, |k2| if k2 > 0.0 { 1.0 / k2 } else { 0.0 })
}

fn weighted(u: &SpectralField, w: impl Fn(f64) -> f64) -> f64 {
    let dom = u.domain();
    let n = dom.len();
    let mut s = 0.0;
    for c in 0..dom.dim() {
        let comp = u.component(c);
        for &idx in dom.active_modes() {
            s += w(dom.k2(idx)) * comp[idx].norm_sqr();
        }
    }
    debug_assert!(n > 0);
    dom.volume() * s
}

/// `‖u‖_{L^p}` by grid quadrature, exact for band-limited polynomial integrands.
pub fn lp_norm(u: &SpectralField, p: f64) -> f64 {
    u.to_physical().lp_norm(p)
}

/// `‖u‖^p_{L^p}`.
pub fn lp_pow(u: &SpectralField, p: f64) -> f64 {
    u.to_physical().lp_pow(p)
}
