use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Version tag carried by every JSON report.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Relative tolerance for checks limited only by quadrature rounding.
pub const QUADRATURE_TOL: f64 = 1e-8;

/// Outcome of one inequality over a set of seeded samples.
///
/// Margins are normalized `left - right`, so a sample passes when its margin is
/// at most `tolerance`. Identities report `|left - right|` normalized.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub name: String,
    pub samples: usize,
    pub worst_margin: f64,
    /// Seed attaining `worst_margin`.
    pub worst_seed: u64,
    pub tolerance: f64,
    /// Seeds whose margin exceeded `tolerance`, ascending.
    pub failures: Vec<u64>,
}

impl InequalityReport {
    /// Aggregates `(seed, margin)` pairs; NaN margins count as failures.
    pub fn from_samples(name: &str, tolerance: f64, samples: &[(u64, f64)]) -> Result<Self> {
        let Some(&(s0, m0)) = samples.first() else {
            return Err(invalid("samples", "a report needs at least one sample"));
        };
        let mut out = Self {
            name: name.to_string(),
            samples: 1,
            worst_margin: sanitize(m0),
            worst_seed: s0,
            tolerance,
            failures: if m0 <= tolerance { vec![] } else { vec![s0] },
        };
        for &(s, m) in &samples[1..] {
            out.push(s, m);
        }
        out.failures.sort_unstable();
        Ok(out)
    }

    fn push(&mut self, seed: u64, margin: f64) {
        let m = sanitize(margin);
        self.samples += 1;
        if m > self.worst_margin || (m == self.worst_margin && seed < self.worst_seed) {
            self.worst_margin = m;
            self.worst_seed = seed;
        }
        if !(margin <= self.tolerance) {
            self.failures.push(seed);
        }
    }

    /// Combines two reports of the same check; associative and commutative.
    pub fn merge(&self, other: &Self) -> Result<Self> {
        if self.name != other.name || self.tolerance != other.tolerance {
            return Err(invalid("report", "can only merge reports of the same check"));
        }
        let mut out = self.clone();
        out.samples += other.samples;
        if other.worst_margin > out.worst_margin
            || (other.worst_margin == out.worst_margin && other.worst_seed < out.worst_seed)
        {
            out.worst_margin = other.worst_margin;
            out.worst_seed = other.worst_seed;
        }
        out.failures.extend_from_slice(&other.failures);
        out.failures.sort_unstable();
        Ok(out)
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Maps NaN to `f64::MAX` so reports stay serializable and ordered.
fn sanitize(m: f64) -> f64 {
    if m.is_nan() {
        f64::MAX
    } else {
        m.clamp(-f64::MAX, f64::MAX)
    }
}

/// `diff / scale`, with `0/0 = 0` and a signed maximum for a nonzero difference on a null scale.
pub fn normalized(diff: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        diff / scale
    } else if diff == 0.0 {
        0.0
    } else {
        diff.signum() * f64::MAX
    }
}

/// Evaluates several margins per seed in parallel and aggregates one report per name.
pub fn sweep_many<F>(names: &[&str], tolerance: f64, seeds: &[u64], margins: F) -> Result<Vec<InequalityReport>>
where
    F: Fn(u64) -> Result<Vec<f64>> + Sync,
{
    let per_seed: Vec<Vec<f64>> = seeds.par_iter().map(|&s| margins(s)).collect::<Result<_>>()?;
    names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let samples: Vec<(u64, f64)> = seeds
                .iter()
                .zip(&per_seed)
                .map(|(&s, m)| {
                    let v = m.get(j).copied().ok_or_else(|| invalid("margins", "fewer margins than names"))?;
                    Ok((s, v))
                })
                .collect::<Result<_>>()?;
            InequalityReport::from_samples(name, tolerance, &samples)
        })
        .collect()
}

/// Single-margin form of [`sweep_many`].
pub fn sweep<F>(name: &str, tolerance: f64, seeds: &[u64], margin: F) -> Result<InequalityReport>
where
    F: Fn(u64) -> Result<f64> + Sync,
{
    let mut v = sweep_many(&[name], tolerance, seeds, |s| margin(s).map(|m| vec![m]))?;
    Ok(v.remove(0))
}
