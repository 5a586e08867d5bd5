use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use scbf_core::harness::{
    execute, run_sweep, verify_run, with_workers, CheckOutcome, Experiment, ExperimentConfig, REFERENCE_CONFIG,
};
use scbf_core::Error;

#[derive(Parser)]
#[command(name = "scbf", version, about = "Stochastic convective Brinkman-Forchheimer experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads.
    #[arg(long, env = "SCBF_WORKERS", default_value_t = default_workers())]
    workers: usize,
    /// Replaces `noise.seed` from the config.
    #[arg(long)]
    seed_override: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Forward run plus configured checks; writes one run directory.
    Run(Common),
    /// One run per value of a scalar parameter, with an aggregate table.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Parameter to vary, e.g. `dt`, `chi`, `noise.seed`.
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<f64>,
    },
    /// Re-analyzes a stored run directory without re-solving.
    Check {
        /// Run directory written by `scbf run`.
        run_dir: PathBuf,
        /// Where to write the JSON report; defaults to `<run_dir>/check.json`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, env = "SCBF_WORKERS", default_value_t = default_workers())]
        workers: usize,
    },
    /// Prints or writes the documented reference configuration.
    GenConfig {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn load(common: &Common) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(seed) = common.seed_override {
        cfg = cfg.with_seed(seed);
        cfg.validate()?;
    }
    Ok(cfg)
}

fn print_checks(checks: &[CheckOutcome]) {
    for c in checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        println!("{tag} {:<18} metric={:e} {} {:e}", c.name, c.metric, c.comparison, c.tolerance);
    }
}

fn run(common: &Common) -> Result<bool, Error> {
    let exp = Experiment::new(load(common)?)?;
    println!("config_hash={} seed={} regime={:?}", exp.hash, exp.seed(), exp.regime);
    let out = with_workers(common.workers, || execute(&exp))??;
    scbf_core::harness::write_run(&common.out, &exp, &out)?;
    print_checks(&out.report.checks);
    println!("wrote {}", common.out.display());
    Ok(out.report.passed)
}

fn sweep(common: &Common, axis: &str, values: &[f64]) -> Result<bool, Error> {
    let cfg = load(common)?;
    let rep = run_sweep(&cfg, axis, values, &common.out, common.workers)?;
    for r in &rep.rows {
        let failed: Vec<&str> = r.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        let note = r.error.clone().unwrap_or_else(|| failed.join(","));
        println!("{:<5} {}  {note}", r.status, r.dir);
    }
    println!("wrote {}", common.out.join("sweep.csv").display());
    Ok(rep.passed())
}

fn check(run_dir: &Path, out: Option<&Path>, workers: usize) -> Result<bool, Error> {
    let rep = with_workers(workers, || verify_run(run_dir))??;
    println!("config_hash={} seed={}", rep.config_hash, rep.seed);
    for f in &rep.mismatched_files {
        println!("FAIL hash mismatch: {f}");
    }
    for f in &rep.bad_snapshots {
        println!("FAIL snapshot: {f}");
    }
    print_checks(&rep.checks);
    let path = out.map_or_else(|| run_dir.join("check.json"), Path::to_path_buf);
    fs::write(&path, serde_json::to_string_pretty(&rep)? + "\n")?;
    Ok(rep.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(c) => run(c),
        Command::Sweep { common, axis, values } => sweep(common, axis, values),
        Command::Check { run_dir, out, workers } => check(run_dir, out.as_deref(), *workers),
        Command::GenConfig { out: Some(p) } => fs::write(p, REFERENCE_CONFIG).map(|_| true).map_err(Error::from),
        Command::GenConfig { out: None } => {
            print!("{REFERENCE_CONFIG}");
            Ok(true)
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 1 })
        }
    }
}
