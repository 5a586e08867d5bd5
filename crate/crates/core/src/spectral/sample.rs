use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::domain::Domain;
use super::field::{leray_project, RawCoeffs, SpectralField};
use super::norms::h_norm;

/// Random admissible field with `|k|^{-2}` coefficient decay, scaled to `‖u‖_H = h_norm`.
pub fn random_field(domain: &Arc<Domain>, seed: u64, h_norm_target: f64) -> SpectralField {
    random_field_with_decay(domain, seed, h_norm_target, 2.0)
}

pub fn random_field_with_decay(
    domain: &Arc<Domain>,
    seed: u64,
    h_norm_target: f64,
    decay: f64,
) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = domain.dim();
    let n = domain.len();
    let mut coeffs = vec![Complex64::default(); d * n];
    for &idx in domain.active_modes() {
        let amp = domain.k2(idx).powf(-decay / 2.0);
        for c in 0..d {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            coeffs[c * n + idx] = Complex64::new(re, im) * amp;
        }
    }
    let raw = RawCoeffs::new(domain.clone(), coeffs).expect("sized by construction");
    let u = leray_project(&raw);
    let h = h_norm(&u);
    if h == 0.0 {
        u
    } else {
        u.scaled(h_norm_target / h)
    }
}

/// The shear flow `(amp·sin(m·x₂), 0[, 0])`, a single Stokes eigenfunction.
pub fn shear_field(domain: &Arc<Domain>, m: i64, amp: f64) -> SpectralField {
    let d = domain.dim();
    let n = domain.len();
    let mut coeffs = vec![Complex64::default(); d * n];
    for idx in 0..n {
        let w = domain.wavenumber(idx);
        let others_zero = (0..d).all(|a| a == 1 || w[a] == 0);
        if others_zero && w[1] == m {
            coeffs[idx] = Complex64::new(0.0, -amp / 2.0);
        } else if others_zero && w[1] == -m {
            coeffs[idx] = Complex64::new(0.0, amp / 2.0);
        }
    }
    let raw = RawCoeffs::new(domain.clone(), coeffs).expect("sized by construction");
    leray_project(&raw)
}
