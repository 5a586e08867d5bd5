use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::artifacts::{execute, write_run, RunOutput};
use super::config::ExperimentConfig;
use super::experiment::{num, CheckOutcome, Experiment, Table};
use crate::error::{Error, Result};

pub const SWEEP_FILE: &str = "sweep.csv";

/// One sub-run of a sweep.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub dir: String,
    pub config_hash: String,
    /// `"pass"`, `"fail"` or `"error"`.
    pub status: String,
    pub error: Option<String>,
    pub checks: Vec<CheckOutcome>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepReport {
    pub axis: String,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.status == "pass")
    }

    /// One row per value: the metric of every check and its ratio to the previous row's.
    pub fn table(&self, check_names: &[String]) -> Table {
        let mut header: Vec<String> = vec![self.axis.clone(), "status".into()];
        for n in check_names {
            header.extend([format!("{n}_metric"), format!("{n}_passed"), format!("{n}_ratio")]);
        }
        let refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
        let mut t = Table::new(SWEEP_FILE, &refs);
        let mut prev: Option<&SweepRow> = None;
        for row in &self.rows {
            let mut cells = vec![num(row.value), row.status.clone()];
            for n in check_names {
                let this = row.checks.iter().find(|c| &c.name == n);
                let before = prev.and_then(|p| p.checks.iter().find(|c| &c.name == n));
                let ratio = match (before, this) {
                    (Some(b), Some(c)) if c.metric != 0.0 => num(b.metric / c.metric),
                    _ => String::new(),
                };
                cells.push(this.map_or_else(String::new, |c| num(c.metric)));
                cells.push(this.map_or_else(String::new, |c| c.passed.to_string()));
                cells.push(ratio);
            }
            t.push(cells);
            prev = Some(row);
        }
        t
    }
}

/// Runs `f` on a pool of `workers` threads; parallel loops inside `f` share it.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Runs one sub-run per value with up to `workers` threads; a single collector writes `out/<axis>=<value>/`.
///
/// Every sub-config is validated before any computation.
pub fn run_sweep(base: &ExperimentConfig, axis: &str, values: &[f64], out: &Path, workers: usize) -> Result<SweepReport> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    let exps: Vec<Experiment> =
        values.iter().map(|&v| Experiment::new(base.with_axis(axis, v)?)).collect::<Result<_>>()?;
    let results: Vec<Result<RunOutput>> = with_workers(workers, || exps.par_iter().map(execute).collect())?;
    fs::create_dir_all(out)?;
    let mut rows = Vec::with_capacity(values.len());
    for ((v, exp), res) in values.iter().zip(&exps).zip(results) {
        let dir = format!("{axis}={}", num(*v));
        let row = match res {
            Ok(o) => {
                write_run(&out.join(&dir), exp, &o)?;
                let status = if o.report.passed { "pass" } else { "fail" };
                SweepRow {
                    value: *v,
                    dir,
                    config_hash: exp.hash.clone(),
                    status: status.into(),
                    error: None,
                    checks: o.report.checks,
                }
            }
            Err(e) => SweepRow {
                value: *v,
                dir,
                config_hash: exp.hash.clone(),
                status: "error".into(),
                error: Some(e.to_string()),
                checks: vec![],
            },
        };
        rows.push(row);
    }
    let report = SweepReport { axis: axis.to_string(), rows };
    let names: Vec<String> = base.check.iter().map(|c| c.name.name().to_string()).collect();
    fs::write(out.join(SWEEP_FILE), report.table(&names).to_csv(&base.hash(), base.noise.seed))?;
    fs::write(out.join("sweep.json"), serde_json::to_string_pretty(&report)? + "\n")?;
    Ok(report)
}
