use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Serializable description of a periodic box and its grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub dim: usize,
    pub grid_n: usize,
    pub box_len: Vec<f64>,
}

impl DomainSpec {
    /// The `[0, 2π]^dim` box, for which the first Stokes eigenvalue is 1.
    pub fn cube(dim: usize, grid_n: usize) -> Self {
        Self {
            dim,
            grid_n,
            box_len: vec![2.0 * PI; dim],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim != 2 && self.dim != 3 {
            return Err(invalid("dim", format!("must be 2 or 3, got {}", self.dim)));
        }
        if self.grid_n < 4 || !self.grid_n.is_power_of_two() {
            return Err(invalid(
                "grid_n",
                format!("must be a power of two >= 4, got {}", self.grid_n),
            ));
        }
        if self.box_len.len() != self.dim {
            return Err(invalid(
                "box_len",
                format!("expected {} lengths, got {}", self.dim, self.box_len.len()),
            ));
        }
        if let Some(l) = self.box_len.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(invalid("box_len", format!("lengths must be positive, got {l}")));
        }
        Ok(())
    }
}

/// Periodic box with its wavenumber tables, two-thirds dealiasing mask and FFT plans.
///
/// Grid points are stored row-major with axis 0 slowest. A vector field of
/// `dim` components occupies `dim * len()` slots, component-major.
pub struct Domain {
    spec: DomainSpec,
    len: usize,
    volume: f64,
    kmax: usize,
    wavenumbers: Vec<[i64; 3]>,
    kvec: Vec<[f64; 3]>,
    k2: Vec<f64>,
    retained: Vec<bool>,
    active: Vec<usize>,
    neg: Vec<usize>,
    lambda1: f64,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Domain")
            .field("dim", &self.spec.dim)
            .field("grid_n", &self.spec.grid_n)
            .field("box_len", &self.spec.box_len)
            .field("kmax", &self.kmax)
            .finish()
    }
}

impl PartialEq for Domain {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

fn signed_wavenumber(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

impl Domain {
    pub fn new(spec: DomainSpec) -> Result<Arc<Self>> {
        spec.validate()?;
        let d = spec.dim;
        let n = spec.grid_n;
        let len = n.pow(d as u32);
        let volume = spec.box_len.iter().product();
        let kmax = (n - 1) / 3;

        let mut wavenumbers = Vec::with_capacity(len);
        let mut kvec = Vec::with_capacity(len);
        let mut k2 = Vec::with_capacity(len);
        let mut retained = Vec::with_capacity(len);
        let mut neg = Vec::with_capacity(len);
        for idx in 0..len {
            let mut ints = [0i64; 3];
            let mut phys = [0.0; 3];
            let mut negidx = 0usize;
            let mut rem = idx;
            for a in (0..d).rev() {
                let i = rem % n;
                rem /= n;
                ints[a] = signed_wavenumber(i, n);
                phys[a] = 2.0 * PI * ints[a] as f64 / spec.box_len[a];
                negidx += ((n - i) % n) * n.pow((d - 1 - a) as u32);
            }
            wavenumbers.push(ints);
            kvec.push(phys);
            k2.push(phys.iter().map(|x| x * x).sum());
            retained.push(ints.iter().all(|m| m.unsigned_abs() as usize <= kmax));
            neg.push(negidx);
        }
        let active: Vec<usize> = (1..len).filter(|&i| retained[i]).collect();
        let lambda1 = active
            .iter()
            .map(|&i| k2[i])
            .fold(f64::INFINITY, f64::min);

        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        Ok(Arc::new(Self {
            spec,
            len,
            volume,
            kmax,
            wavenumbers,
            kvec,
            k2,
            retained,
            active,
            neg,
            lambda1,
            fwd,
            inv,
        }))
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }
    pub fn dim(&self) -> usize {
        self.spec.dim
    }
    pub fn grid_n(&self) -> usize {
        self.spec.grid_n
    }
    /// Number of grid points per component.
    pub fn len(&self) -> usize {
        self.len
    }
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
    pub fn volume(&self) -> f64 {
        self.volume
    }
    /// Largest retained integer wavenumber per axis.
    pub fn kmax(&self) -> usize {
        self.kmax
    }
    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }
    pub fn wavenumber(&self, idx: usize) -> [i64; 3] {
        self.wavenumbers[idx]
    }
    pub fn kvec(&self, idx: usize) -> [f64; 3] {
        self.kvec[idx]
    }
    pub fn k2(&self, idx: usize) -> f64 {
        self.k2[idx]
    }
    /// Index of the mode `-k`.
    pub fn neg(&self, idx: usize) -> usize {
        self.neg[idx]
    }
    /// Two-thirds rule mask; includes the zero mode.
    pub fn dealias_mask(&self) -> &[bool] {
        &self.retained
    }
    /// Retained nonzero modes, the support of every admissible field.
    pub fn active_modes(&self) -> &[usize] {
        &self.active
    }
    pub fn is_active(&self, idx: usize) -> bool {
        idx != 0 && self.retained[idx]
    }
    /// Physical coordinates of grid point `idx`.
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let d = self.dim();
        let n = self.grid_n();
        let mut x = [0.0; 3];
        let mut rem = idx;
        for a in (0..d).rev() {
            x[a] = (rem % n) as f64 * self.spec.box_len[a] / n as f64;
            rem /= n;
        }
        x
    }

    /// Quadrature weight of one grid point.
    pub fn cell_volume(&self) -> f64 {
        self.volume / self.len as f64
    }

    /// Unnormalized in-place multi-dimensional transform of one scalar grid.
    fn transform(&self, buf: &mut [Complex64], inverse: bool) {
        debug_assert_eq!(buf.len(), self.len);
        let n = self.grid_n();
        let d = self.dim();
        let plan = if inverse { &self.inv } else { &self.fwd };
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        // Last axis is contiguous.
        plan.process_with_scratch(buf, &mut scratch);
        let mut lines = vec![Complex64::default(); self.len];
        for a in 0..d - 1 {
            let stride = n.pow((d - 1 - a) as u32);
            let outer = self.len / (n * stride);
            for o in 0..outer {
                for inner in 0..stride {
                    let base = o * n * stride + inner;
                    let line = (o * stride + inner) * n;
                    for j in 0..n {
                        lines[line + j] = buf[base + j * stride];
                    }
                }
            }
            plan.process_with_scratch(&mut lines, &mut scratch);
            for o in 0..outer {
                for inner in 0..stride {
                    let base = o * n * stride + inner;
                    let line = (o * stride + inner) * n;
                    for j in 0..n {
                        buf[base + j * stride] = lines[line + j];
                    }
                }
            }
        }
    }

    /// Grid values to coefficients, `u(x) = Σ û(k) e^{ik·x}`.
    pub(crate) fn forward_in_place(&self, buf: &mut [Complex64]) {
        self.transform(buf, false);
        let scale = 1.0 / self.len as f64;
        buf.iter_mut().for_each(|z| *z *= scale);
    }

    pub(crate) fn inverse_in_place(&self, buf: &mut [Complex64]) {
        self.transform(buf, true);
    }

    /// Forward transform of one real scalar grid.
    pub(crate) fn forward_real(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward_in_place(&mut buf);
        buf
    }

    /// Inverse transforms of two Hermitian coefficient grids packed into one complex transform.
    pub(crate) fn inverse_real_pair(&self, a: &[Complex64], b: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
        let i = Complex64::i();
        let mut buf: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| x + i * y).collect();
        self.inverse_in_place(&mut buf);
        (buf.iter().map(|z| z.re).collect(), buf.iter().map(|z| z.im).collect())
    }

    pub(crate) fn inverse_real(&self, a: &[Complex64]) -> Vec<f64> {
        let mut buf = a.to_vec();
        self.inverse_in_place(&mut buf);
        buf.iter().map(|z| z.re).collect()
    }

    /// Forward transforms of two real grids packed into one complex transform.
    pub(crate) fn forward_real_pair(&self, a: &[f64], b: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let mut buf: Vec<Complex64> = a.iter().zip(b).map(|(&x, &y)| Complex64::new(x, y)).collect();
        self.forward_in_place(&mut buf);
        let half = Complex64::new(0.5, 0.0);
        let mut fa = vec![Complex64::default(); self.len];
        let mut fb = vec![Complex64::default(); self.len];
        for k in 0..self.len {
            let z = buf[k];
            let zc = buf[self.neg[k]].conj();
            fa[k] = (z + zc) * half;
            fb[k] = (z - zc) * Complex64::new(0.0, -0.5);
        }
        (fa, fb)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dealias_cutoff_matches_two_thirds_rule() {
        let d = Domain::new(DomainSpec::cube(2, 32)).unwrap();
        assert_eq!(d.kmax(), 10);
        assert_eq!(d.active_modes().len(), 21 * 21 - 1);
        let d = Domain::new(DomainSpec::cube(3, 16)).unwrap();
        assert_eq!(d.kmax(), 5);
        assert_eq!(d.active_modes().len(), 11 * 11 * 11 - 1);
    }

    #[test]
    fn lambda1_is_one_on_the_2pi_box() {
        let d = Domain::new(DomainSpec::cube(3, 8)).unwrap();
        assert_eq!(d.lambda1(), 1.0);
        let d = Domain::new(DomainSpec {
            dim: 2,
            grid_n: 8,
            box_len: vec![4.0 * PI, 2.0 * PI],
        })
        .unwrap();
        assert!((d.lambda1() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn neg_index_is_an_involution_flipping_wavenumbers() {
        let d = Domain::new(DomainSpec::cube(3, 8)).unwrap();
        for idx in 0..d.len() {
            let j = d.neg(idx);
            assert_eq!(d.neg(j), idx);
            let (a, b) = (d.wavenumber(idx), d.wavenumber(j));
            for ax in 0..3 {
                // Nyquist maps to itself.
                assert!(a[ax] == -b[ax] || a[ax].unsigned_abs() == 4);
            }
        }
    }

    #[test]
    fn single_mode_transforms_to_unit_coefficient() {
        let d = Domain::new(DomainSpec::cube(2, 16)).unwrap();
        let vals: Vec<f64> = (0..d.len())
            .map(|i| {
                let x = d.point(i);
                (2.0 * x[0] - 3.0 * x[1]).cos()
            })
            .collect();
        let c = d.forward_real(&vals);
        for idx in 0..d.len() {
            let w = d.wavenumber(idx);
            let expect = if (w[0] == 2 && w[1] == -3) || (w[0] == -2 && w[1] == 3) { 0.5 } else { 0.0 };
            assert!((c[idx].re - expect).abs() < 1e-14 && c[idx].im.abs() < 1e-14, "{w:?}");
        }
    }

    #[test]
    fn packed_pair_transforms_match_single_transforms() {
        let d = Domain::new(DomainSpec::cube(3, 8)).unwrap();
        let a: Vec<f64> = (0..d.len()).map(|i| ((i * 7919) % 101) as f64 / 50.0 - 1.0).collect();
        let b: Vec<f64> = (0..d.len()).map(|i| ((i * 104729) % 97) as f64 / 48.0 - 1.0).collect();
        let (fa, fb) = d.forward_real_pair(&a, &b);
        let (ga, gb) = (d.forward_real(&a), d.forward_real(&b));
        for k in 0..d.len() {
            assert!((fa[k] - ga[k]).norm() < 1e-14);
            assert!((fb[k] - gb[k]).norm() < 1e-14);
        }
        let (ra, rb) = d.inverse_real_pair(&fa, &fb);
        for k in 0..d.len() {
            assert!((ra[k] - a[k]).abs() < 1e-13);
            assert!((rb[k] - b[k]).abs() < 1e-13);
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(Domain::new(DomainSpec::cube(4, 8)).is_err());
        assert!(Domain::new(DomainSpec::cube(2, 2)).is_err());
        assert!(Domain::new(DomainSpec::cube(2, 12)).is_err());
        assert!(Domain::new(DomainSpec { dim: 2, grid_n: 8, box_len: vec![1.0] }).is_err());
        assert!(Domain::new(DomainSpec { dim: 2, grid_n: 8, box_len: vec![1.0, -1.0] }).is_err());
    }
}
