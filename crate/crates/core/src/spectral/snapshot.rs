//! Binary field snapshots.
//!
//! Layout: the 8 magic bytes `SCBFSNAP`, a little-endian `u32` header length,
//! a JSON [`SnapshotHeader`], then `dim * n_modes` little-endian `(re, im)`
//! `f64` pairs. Coefficients are component-major; within a component the
//! active modes (dealiased, nonzero) appear in increasing grid index, with
//! axis 0 slowest and wavenumber `i` stored at index `i mod grid_n`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::domain::{Domain, DomainSpec};
use super::field::SpectralField;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"SCBFSNAP";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub format_version: u32,
    pub dim: usize,
    pub grid_n: usize,
    pub box_len: Vec<f64>,
    pub n_modes: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

/// Optional metadata stored alongside a field.
#[derive(Clone, Debug, Default)]
pub struct SnapshotMeta {
    pub time: Option<f64>,
    pub step: Option<i64>,
    pub config_hash: Option<String>,
}

pub fn write_snapshot<W: Write>(mut w: W, field: &SpectralField, meta: &SnapshotMeta) -> Result<()> {
    let dom = field.domain();
    let spec = dom.spec();
    let header = SnapshotHeader {
        format_version: SNAPSHOT_VERSION,
        dim: spec.dim,
        grid_n: spec.grid_n,
        box_len: spec.box_len.clone(),
        n_modes: dom.active_modes().len(),
        time: meta.time,
        step: meta.step,
        config_hash: meta.config_hash.clone(),
    };
    let json = serde_json::to_vec(&header)?;
    w.write_all(MAGIC)?;
    w.write_all(&(json.len() as u32).to_le_bytes())?;
    w.write_all(&json)?;
    for c in 0..spec.dim {
        let comp = field.component(c);
        for &idx in dom.active_modes() {
            w.write_all(&comp[idx].re.to_le_bytes())?;
            w.write_all(&comp[idx].im.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Reads a snapshot, building a fresh domain from its header.
pub fn read_snapshot<R: Read>(r: R) -> Result<(SnapshotHeader, SpectralField)> {
    read_snapshot_on(r, None)
}

/// Reads a snapshot onto an existing domain, which must match the header.
pub fn read_snapshot_on<R: Read>(mut r: R, domain: Option<&Arc<Domain>>) -> Result<(SnapshotHeader, SpectralField)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Snapshot("bad magic bytes".into()));
    }
    let mut len = [0u8; 4];
    r.read_exact(&mut len)?;
    let mut json = vec![0u8; u32::from_le_bytes(len) as usize];
    r.read_exact(&mut json)?;
    let header: SnapshotHeader = serde_json::from_slice(&json)?;
    if header.format_version != SNAPSHOT_VERSION {
        return Err(Error::Snapshot(format!("unsupported version {}", header.format_version)));
    }
    let spec = DomainSpec {
        dim: header.dim,
        grid_n: header.grid_n,
        box_len: header.box_len.clone(),
    };
    let dom = match domain {
        Some(d) if *d.spec() == spec => d.clone(),
        Some(_) => return Err(Error::DomainMismatch),
        None => Domain::new(spec)?,
    };
    if header.n_modes != dom.active_modes().len() {
        return Err(Error::Snapshot(format!(
            "header lists {} modes, domain has {}",
            header.n_modes,
            dom.active_modes().len()
        )));
    }
    let n = dom.len();
    let mut coeffs = vec![Complex64::default(); dom.dim() * n];
    for c in 0..dom.dim() {
        for &idx in dom.active_modes() {
            let re = read_f64(&mut r)?;
            let im = read_f64(&mut r)?;
            coeffs[c * n + idx] = Complex64::new(re, im);
        }
    }
    let field = SpectralField::from_coeffs_unchecked(dom, coeffs);
    if field.max_hermitian_defect() != 0.0 || field.max_divergence_ratio() > 1e-10 {
        return Err(Error::Snapshot("coefficients are not an admissible field".into()));
    }
    Ok((header, field))
}

pub fn save_snapshot(path: impl AsRef<Path>, field: &SpectralField, meta: &SnapshotMeta) -> Result<()> {
    write_snapshot(BufWriter::new(File::create(path)?), field, meta)
}

pub fn load_snapshot(path: impl AsRef<Path>) -> Result<(SnapshotHeader, SpectralField)> {
    read_snapshot(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::sample::random_field;

    #[test]
    fn round_trip_is_bit_exact() {
        let dom = Domain::new(DomainSpec::cube(3, 8)).unwrap();
        let u = random_field(&dom, 11, 1.5);
        let mut buf = Vec::new();
        let meta = SnapshotMeta { time: Some(0.25), step: Some(-3), config_hash: Some("abc".into()) };
        write_snapshot(&mut buf, &u, &meta).unwrap();
        let (h, v) = read_snapshot(buf.as_slice()).unwrap();
        assert_eq!(h.time, Some(0.25));
        assert_eq!(h.step, Some(-3));
        assert_eq!(v.coeffs(), u.coeffs());
        let (_, w) = read_snapshot_on(buf.as_slice(), Some(&dom)).unwrap();
        assert!(Arc::ptr_eq(w.domain(), &dom));
    }

    #[test]
    fn rejects_corrupt_input() {
        assert!(read_snapshot(&b"NOTASNAPxxxx"[..]).is_err());
        let dom = Domain::new(DomainSpec::cube(2, 8)).unwrap();
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &random_field(&dom, 1, 1.0), &SnapshotMeta::default()).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(read_snapshot(buf.as_slice()).is_err());
        let other = Domain::new(DomainSpec::cube(2, 16)).unwrap();
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &random_field(&dom, 1, 1.0), &SnapshotMeta::default()).unwrap();
        assert!(matches!(read_snapshot_on(buf.as_slice(), Some(&other)), Err(Error::DomainMismatch)));
    }
}
