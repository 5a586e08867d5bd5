use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{CheckKind, ExperimentConfig};
use super::experiment::{norms_table, CheckOutcome, Experiment, Table};
use crate::analysis::{check_apriori_ledger, check_energy_equality, REPORT_SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::solver::{EnergyLedger, LedgerRow, Trajectory};
use crate::spectral::snapshot::{load_snapshot, save_snapshot, SnapshotMeta};
use crate::spectral::{Domain, Regime};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const LEDGER_FILE: &str = "ledger.csv";
pub const REPORT_FILE: &str = "report.json";
pub const FIELDS_DIR: &str = "fields";
/// Largest `|k·û|/(|k||û|)` accepted in a stored field.
pub const DIVERGENCE_TOL: f64 = 1e-10;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub file: String,
    pub time: f64,
    pub step: i64,
}

/// Provenance record of a run directory.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub config_hash: String,
    pub seed: u64,
    pub regime: Regime,
    pub config: ExperimentConfig,
    /// `‖f‖²_{V'}`, needed to re-evaluate the a-priori bound from the ledger.
    pub f_vprime_sq: f64,
    pub steps: usize,
    pub snapshots: Vec<SnapshotEntry>,
    /// SHA-256 of every other file, keyed by relative path.
    pub files: BTreeMap<String, String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub config_hash: String,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<CheckOutcome>,
}

/// Everything produced by one run, before it is written.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub trajectory: Trajectory,
    pub report: RunReport,
    pub tables: Vec<Table>,
}

/// Forward solve plus configured checks.
pub fn execute(exp: &Experiment) -> Result<RunOutput> {
    let trajectory = exp.forward()?;
    let (checks, mut tables) = exp.run_checks(&trajectory)?;
    tables.insert(0, norms_table(&trajectory, exp.config.params.r));
    let report = RunReport {
        schema_version: REPORT_SCHEMA_VERSION,
        config_hash: exp.hash.clone(),
        seed: exp.seed(),
        passed: checks.iter().all(|c| c.passed),
        checks,
    };
    Ok(RunOutput { trajectory, report, tables })
}

fn sha256_file(path: &Path) -> Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

pub fn ledger_csv(ledger: &EnergyLedger, hash: &str, seed: u64) -> String {
    let mut s = format!("# config_hash={hash} seed={seed}\n{}\n", LedgerRow::COLUMNS.join(","));
    for r in &ledger.rows {
        s.push_str(&format!("{},{}", r.step, r.time));
        for v in r.values() {
            s.push_str(&format!(",{v}"));
        }
        s.push('\n');
    }
    s
}

fn parse_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{LEDGER_FILE} line {line}: {msg}"))
}

pub fn parse_ledger_csv(text: &str) -> Result<Vec<LedgerRow>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.starts_with('#') && !l.is_empty());
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
    if header != LedgerRow::COLUMNS.join(",") {
        return Err(parse_err(1, "unexpected columns"));
    }
    lines
        .map(|(i, l)| {
            let cells: Vec<&str> = l.split(',').collect();
            if cells.len() != LedgerRow::COLUMNS.len() {
                return Err(parse_err(i + 1, format!("expected {} cells", LedgerRow::COLUMNS.len())));
            }
            let step = cells[0].parse::<usize>().map_err(|e| parse_err(i + 1, e))?;
            let v: Vec<f64> = cells[1..].iter().map(|c| c.parse::<f64>().map_err(|e| parse_err(i + 1, e))).collect::<Result<_>>()?;
            Ok(LedgerRow {
                step,
                time: v[0],
                v_h2: v[1],
                v_v2: v[2],
                w_lr1: v[3],
                b_w_v_ups: v[4],
                c_w_v: v[5],
                c_w_ups: v[6],
                f_v: v[7],
                ups_v: v[8],
                ups_h2: v[9],
                ups_l4_4: v[10],
                ups_lr1: v[11],
            })
        })
        .collect()
}

/// Writes the run directory; files not listed in the manifest are left alone.
pub fn write_run(dir: &Path, exp: &Experiment, out: &RunOutput) -> Result<Manifest> {
    let fields = dir.join(FIELDS_DIR);
    fs::create_dir_all(&fields)?;
    let (hash, seed) = (exp.hash.as_str(), exp.seed());
    let mut written: Vec<String> = Vec::new();
    let traj = &out.trajectory;
    let mut snapshots = Vec::with_capacity(traj.times.len());
    for (i, &t) in traj.times.iter().enumerate() {
        let rel = format!("{FIELDS_DIR}/{i:04}.snap");
        let step = (t / exp.solver.dt).round() as i64;
        let meta = SnapshotMeta { time: Some(t), step: Some(step), config_hash: Some(hash.to_string()) };
        save_snapshot(dir.join(&rel), &traj.u(i), &meta)?;
        snapshots.push(SnapshotEntry { file: rel.clone(), time: t, step });
        written.push(rel);
    }
    fs::write(dir.join(LEDGER_FILE), ledger_csv(&traj.ledger, hash, seed))?;
    written.push(LEDGER_FILE.into());
    for t in &out.tables {
        fs::write(dir.join(&t.file), t.to_csv(hash, seed))?;
        written.push(t.file.clone());
    }
    fs::write(dir.join(REPORT_FILE), serde_json::to_string_pretty(&out.report)? + "\n")?;
    written.push(REPORT_FILE.into());
    let mut files = BTreeMap::new();
    for rel in written {
        files.insert(rel.clone(), sha256_file(&dir.join(&rel))?);
    }
    let manifest = Manifest {
        schema_version: REPORT_SCHEMA_VERSION,
        config_hash: hash.to_string(),
        seed,
        regime: exp.regime,
        config: exp.config.clone(),
        f_vprime_sq: exp.f_vprime_sq,
        steps: traj.ledger.steps(),
        snapshots,
        files,
    };
    fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(manifest)
}

/// Re-analysis of a stored run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifyReport {
    pub schema_version: u32,
    pub config_hash: String,
    pub seed: u64,
    /// Files whose hash differs from the manifest or that are missing.
    pub mismatched_files: Vec<String>,
    /// Snapshots with a foreign config hash or a divergent field.
    pub bad_snapshots: Vec<String>,
    pub checks: Vec<CheckOutcome>,
    pub passed: bool,
}

fn tolerance_for(config: &ExperimentConfig, kind: CheckKind) -> f64 {
    config.check.iter().find(|c| c.name == kind).map_or_else(|| kind.default_tolerance(), |c| c.tolerance())
}

fn ledger_checks(dir: &Path, manifest: &Manifest, domain: &Domain) -> Result<Vec<CheckOutcome>> {
    let config = &manifest.config;
    let rows = parse_ledger_csv(&fs::read_to_string(dir.join(LEDGER_FILE))?)?;
    let ledger = EnergyLedger { params: config.params, dt: config.run.dt, f_vprime_sq: manifest.f_vprime_sq, rows };
    let energy = check_energy_equality(&ledger)?;
    let eq_tol = tolerance_for(config, CheckKind::EnergyEquality);
    let apriori = check_apriori_ledger(&ledger, domain.dim(), domain.lambda1())?;
    let ap_tol = tolerance_for(config, CheckKind::AprioriBound);
    Ok(vec![
        CheckOutcome {
            name: CheckKind::EnergyEquality.name().into(),
            passed: energy.relative_max <= eq_tol,
            metric: energy.relative_max,
            tolerance: eq_tol,
            comparison: "<=".into(),
            detail: serde_json::json!({ "max": energy.max, "max_step_increase": energy.max_step_increase }),
        },
        CheckOutcome {
            name: CheckKind::AprioriBound.name().into(),
            passed: apriori.worst_excess <= ap_tol,
            metric: apriori.worst_excess,
            tolerance: ap_tol,
            comparison: "<=".into(),
            detail: serde_json::json!({ "constant": apriori.constant }),
        },
    ])
}

/// Checks file hashes and snapshots, then reruns the energy equality and a-priori bound from the ledger.
pub fn verify_run(dir: &Path) -> Result<VerifyReport> {
    let manifest: Manifest = serde_json::from_str(&fs::read_to_string(dir.join(MANIFEST_FILE))?)?;
    let config = &manifest.config;
    config.validate()?;
    if config.hash() != manifest.config_hash {
        return Err(Error::Config("manifest config does not match its recorded hash".into()));
    }
    let mut mismatched_files = Vec::new();
    for (rel, want) in &manifest.files {
        let path: PathBuf = dir.join(rel);
        match sha256_file(&path) {
            Ok(got) if &got == want => {}
            _ => mismatched_files.push(rel.clone()),
        }
    }
    let domain = Domain::new(config.domain.spec())?;
    let mut bad_snapshots = Vec::new();
    for s in &manifest.snapshots {
        match load_snapshot(dir.join(&s.file)) {
            Ok((h, f))
                if h.config_hash.as_deref() == Some(manifest.config_hash.as_str())
                    && f.max_divergence_ratio() <= DIVERGENCE_TOL => {}
            _ => bad_snapshots.push(s.file.clone()),
        }
    }
    let checks = ledger_checks(dir, &manifest, &domain).unwrap_or_else(|e| {
        vec![CheckOutcome {
            name: "ledger".into(),
            passed: false,
            metric: 0.0,
            tolerance: 0.0,
            comparison: "<=".into(),
            detail: serde_json::json!({ "error": e.to_string() }),
        }]
    });
    let passed = mismatched_files.is_empty() && bad_snapshots.is_empty() && checks.iter().all(|c| c.passed);
    Ok(VerifyReport {
        schema_version: REPORT_SCHEMA_VERSION,
        config_hash: manifest.config_hash.clone(),
        seed: manifest.seed,
        mismatched_files,
        bad_snapshots,
        checks,
        passed,
    })
}
