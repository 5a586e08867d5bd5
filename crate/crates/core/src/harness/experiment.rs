use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::config::{CheckKind, CheckSpec, ExperimentConfig, InitialKind};
use crate::analysis::{
    auto_horizon, check_absorption, check_apriori_bound, check_chi_independence, check_cocycle,
    check_data_continuity, check_energy_equality, compute_kappa, kappa_class_sweep, pullback_attraction_diagnostic,
    sweep_b_dual, sweep_b_interpolated, sweep_identities, sweep_ladyzhenskaya, sweep_local_monotonicity_g,
    sweep_monotonicity_c, DataPerturbation, InequalityReport, KappaRow, KappaSettings, NormSeries, DEFAULT_TAIL_TOL,
};
use crate::error::{invalid, Result};
use crate::noise::{chi_difference_residual, ou_mode_statistics, ou_path, ColoringSpectrum, Omega, WienerPath};
use crate::solver::{noise_stride, solve_transformed, SolverConfig, Trajectory};
use crate::spectral::{
    h_norm, lp_norm, random_field, shear_field, v_norm, vprime_norm_sq, Domain, PhysicalParams, Regime, SpectralField,
};

/// Perturbation size in the data-continuity check, relative to `max(‖x‖_H, 1)`.
pub const CONTINUITY_EPS: f64 = 1e-2;
/// Perturbation levels `1/n` of the data-continuity check.
pub const CONTINUITY_NS: [u32; 5] = [1, 2, 4, 8, 16];
/// Lag of the autocovariance in the OU statistics check.
pub const OU_LAG: f64 = 0.1;
/// Ceiling on the χ-difference defect.
pub const CHI_DIFFERENCE_TOL: f64 = 1e-10;

/// Plot-ready numeric table; cells are preformatted so output is byte-stable.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub file: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(file: &str, header: &[&str]) -> Self {
        Self { file: file.to_string(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn push_nums(&mut self, row: &[f64]) {
        self.push(row.iter().map(|&x| num(x)).collect());
    }

    /// CSV text under a `# config_hash=… seed=…` line.
    pub fn to_csv(&self, hash: &str, seed: u64) -> String {
        let mut s = format!("# config_hash={hash} seed={seed}\n{}\n", self.header.join(","));
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

/// Shortest round-trip decimal form.
pub fn num(x: f64) -> String {
    format!("{x}")
}

/// Result of one configured check.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    /// The scalar compared against `tolerance`.
    pub metric: f64,
    pub tolerance: f64,
    /// How `metric` is compared: `"<="` or `">="`.
    pub comparison: String,
    pub detail: serde_json::Value,
}

impl CheckOutcome {
    fn at_most(name: CheckKind, metric: f64, tolerance: f64, extra: bool, detail: impl Serialize) -> Result<Self> {
        Ok(Self {
            name: name.name().to_string(),
            passed: extra && metric <= tolerance,
            metric,
            tolerance,
            comparison: "<=".into(),
            detail: serde_json::to_value(detail)?,
        })
    }

    fn at_least(name: CheckKind, metric: f64, tolerance: f64, extra: bool, detail: impl Serialize) -> Result<Self> {
        Ok(Self {
            name: name.name().to_string(),
            passed: extra && metric >= tolerance,
            metric,
            tolerance,
            comparison: ">=".into(),
            detail: serde_json::to_value(detail)?,
        })
    }
}

/// A validated configuration with its noise realization, data and solver settings.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub hash: String,
    pub regime: Regime,
    pub domain: Arc<Domain>,
    pub omega: Omega,
    pub solver: SolverConfig,
    pub x0: SpectralField,
    pub f_vprime_sq: f64,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let regime = config.params.regime(config.domain.dim)?;
        let domain = Domain::new(config.domain.spec())?;
        let n = &config.noise;
        let spectrum = Arc::new(ColoringSpectrum::build(&domain, n.delta, n.base_amp, n.s)?);
        let wiener = WienerPath::new(n.seed, n.dt)?.with_anchor_time(-config.history());
        let omega = Omega::new(spectrum, wiener);
        let r = &config.run;
        let x0 = match r.initial.kind {
            InitialKind::Random => random_field(&domain, r.initial.seed, r.initial.norm),
            InitialKind::Zero => SpectralField::zeros(domain.clone()),
            InitialKind::Shear => {
                let s = shear_field(&domain, r.initial.mode, 1.0);
                let h = h_norm(&s);
                if h == 0.0 {
                    return Err(invalid("initial.mode", "shear mode is removed by dealiasing"));
                }
                s.scaled(r.initial.norm / h)
            }
        };
        let mut solver = SolverConfig::new(config.params, r.dt).with_store_every(r.store_every);
        let mut f_vprime_sq = 0.0;
        if r.forcing_norm > 0.0 {
            let f = random_field(&domain, r.forcing_seed, r.forcing_norm);
            f_vprime_sq = vprime_norm_sq(&f);
            solver = solver.with_forcing(f);
        }
        noise_stride(r.dt, n.dt)?;
        let hash = config.hash();
        Ok(Self { config, hash, regime, domain, omega, solver, x0, f_vprime_sq })
    }

    pub fn seed(&self) -> u64 {
        self.config.noise.seed
    }

    /// Forward solve on `[0, t_final]` from `x0`.
    pub fn forward(&self) -> Result<Trajectory> {
        let t = self.config.run.t_final;
        let ou = ou_path(&self.omega, &self.config.params, 0.0, t)?;
        let v0 = &self.x0 - &ou.state(0);
        solve_transformed(&v0, &ou, 0.0, t, &self.solver)
    }

    /// Norm series on the run grid, long enough for `κ` at every shift up to `max_shift`.
    fn norm_series(&self, max_shift: f64) -> Result<NormSeries> {
        let stride = noise_stride(self.config.run.dt, self.config.noise.dt)?;
        let h = stride as f64 * self.config.noise.dt;
        let span = max_shift + auto_horizon(self.config.params.alpha, DEFAULT_TAIL_TOL) + h;
        let t_lo = -(span / h).ceil() * h;
        NormSeries::build(&self.omega, &self.config.params, t_lo, stride)
    }

    fn kappa_at(&self, series: &NormSeries, shift: f64, tail_tol: f64) -> Result<KappaRow> {
        let settings = KappaSettings { tail_tol, ..KappaSettings::auto(self.config.params.alpha) };
        compute_kappa(series, &self.config.params, self.f_vprime_sq, shift, &settings)
    }

    /// Every configured check in order, with its tables.
    pub fn run_checks(&self, traj: &Trajectory) -> Result<(Vec<CheckOutcome>, Vec<Table>)> {
        let mut outcomes = Vec::new();
        let mut tables = Vec::new();
        for spec in &self.config.check {
            let (o, t) = self.run_check(spec, traj)?;
            outcomes.push(o);
            tables.extend(t);
        }
        Ok((outcomes, tables))
    }

    pub fn run_check(&self, spec: &CheckSpec, traj: &Trajectory) -> Result<(CheckOutcome, Vec<Table>)> {
        let tol = spec.tolerance();
        let kind = spec.name;
        let p = &self.config.params;
        let run = &self.config.run;
        match kind {
            CheckKind::Identities | CheckKind::Inequalities => {
                let seeds: Vec<u64> = (0..spec.samples.unwrap_or(500) as u64).collect();
                let reports = if kind == CheckKind::Identities {
                    sweep_identities(&self.domain, p.r, &seeds)?
                } else {
                    self.inequality_reports(&seeds)?
                };
                let worst = reports.iter().map(|r| r.worst_margin).fold(f64::NEG_INFINITY, f64::max);
                let mut t = Table::new(&format!("{}.csv", kind.name()), &["name", "samples", "worst_margin", "worst_seed"]);
                for r in &reports {
                    t.push(vec![r.name.clone(), r.samples.to_string(), num(r.worst_margin), r.worst_seed.to_string()]);
                }
                Ok((CheckOutcome::at_most(kind, worst, tol, true, &reports)?, vec![t]))
            }
            CheckKind::OuStatistics => self.ou_statistics(spec, tol),
            CheckKind::EnergyEquality => {
                let res = check_energy_equality(&traj.ledger)?;
                let mut t = Table::new("energy_residual.csv", &["time", "residual"]);
                for (a, b) in res.times.iter().zip(&res.residual) {
                    t.push_nums(&[*a, *b]);
                }
                let detail = serde_json::json!({
                    "max": res.max, "relative_max": res.relative_max, "max_step_increase": res.max_step_increase,
                });
                Ok((CheckOutcome::at_most(kind, res.relative_max, tol, true, detail)?, vec![t]))
            }
            CheckKind::AprioriBound => {
                let rep = check_apriori_bound(traj)?;
                let mut t = Table::new(
                    "apriori.csv",
                    &["time", "lhs", "rhs_initial", "rhs_noise", "rhs_forcing", "margin", "slack"],
                );
                for i in 0..rep.times.len() {
                    t.push_nums(&[
                        rep.times[i],
                        rep.lhs[i],
                        rep.rhs_initial[i],
                        rep.rhs_noise[i],
                        rep.rhs_forcing[i],
                        rep.margin[i],
                        rep.slack[i],
                    ]);
                }
                let detail = serde_json::json!({ "constant": rep.constant, "worst_excess": rep.worst_excess });
                Ok((CheckOutcome::at_most(kind, rep.worst_excess, tol, true, detail)?, vec![t]))
            }
            CheckKind::ChiIndependence => {
                let chi_ref = spec.chi_ref.unwrap_or(if p.chi == 1.0 { 0.0 } else { 1.0 });
                let g = check_chi_independence(&self.x0, &self.omega, run.t_final, p.chi, chi_ref, &self.solver)?;
                let mut t = Table::new("chi_gap.csv", &["time", "gap"]);
                for (a, b) in g.times.iter().zip(&g.gap) {
                    t.push_nums(&[*a, *b]);
                }
                let detail = serde_json::json!({
                    "chi1": g.chi1, "chi2": g.chi2, "max": g.max, "scale": g.scale, "relative": g.relative,
                });
                Ok((CheckOutcome::at_most(kind, g.relative, tol, true, detail)?, vec![t]))
            }
            CheckKind::Cocycle => {
                let [s, t] = spec.split.unwrap_or([1.0, 1.0]);
                let g = check_cocycle(&self.x0, &self.omega, s, t, &self.solver)?;
                Ok((CheckOutcome::at_most(kind, g.relative, tol, true, g)?, vec![]))
            }
            CheckKind::DataContinuity => {
                let eps = CONTINUITY_EPS * run.initial.norm.max(1.0);
                let pert = DataPerturbation {
                    initial: Some(random_field(&self.domain, run.initial.seed.wrapping_add(1), eps)),
                    forcing: Some(random_field(&self.domain, run.forcing_seed.wrapping_add(1), eps)),
                };
                let tab = check_data_continuity(&self.x0, &pert, &self.omega, run.t_final, &CONTINUITY_NS, &self.solver)?;
                let mut t = Table::new("continuity.csv", &["n", "sup_h", "l2_v", "l_r1"]);
                for r in &tab.rows {
                    t.push(vec![r.n.to_string(), num(r.sup_h), num(r.l2_v), num(r.l_r1)]);
                }
                let worst = tab.sup_ratios.iter().cloned().fold(f64::INFINITY, f64::min);
                Ok((CheckOutcome::at_least(kind, worst, tol, tab.monotone, &tab)?, vec![t]))
            }
            CheckKind::Kappa => {
                let series = self.norm_series(0.0)?;
                let k = self.kappa_at(&series, 0.0, tol)?;
                let mut header = vec!["shift", "horizon"];
                header.extend(KappaRow::NAMES);
                header.extend(["tail_weight", "c"]);
                let mut t = Table::new("kappa.csv", &header);
                let mut row = vec![k.shift, k.horizon];
                row.extend(k.values());
                row.extend([k.tail_weight, k.c]);
                t.push_nums(&row);
                let finite = k.values().iter().all(|x| x.is_finite());
                Ok((CheckOutcome::at_most(kind, k.tail_weight, tol, finite, &k)?, vec![t]))
            }
            CheckKind::KappaClass => {
                let hmax = run.horizons.last().copied().unwrap_or(0.0);
                let series = self.norm_series(hmax)?;
                let settings = KappaSettings::auto(p.alpha);
                let decay = kappa_class_sweep(&series, p, self.f_vprime_sq, &run.horizons, &settings)?;
                let mut header = vec!["horizon"];
                header.extend(KappaRow::NAMES);
                let mut t = Table::new("kappa_class.csv", &header);
                for (i, &h) in run.horizons.iter().enumerate() {
                    let mut row = vec![h];
                    row.extend(decay.iter().map(|d| d.weighted[i]));
                    t.push_nums(&row);
                }
                let failing =
                    decay.iter().filter(|d| ["kappa1", "kappa2", "kappa6"].contains(&d.name.as_str()) && !d.decreasing).count();
                Ok((CheckOutcome::at_most(kind, failing as f64, tol, true, &decay)?, vec![t]))
            }
            CheckKind::Absorption => self.absorption(spec, tol),
            CheckKind::Pullback => {
                let xb_norm = if run.initial.norm > 0.0 { run.initial.norm } else { 1.0 };
                let xb = random_field(&self.domain, run.initial.seed.wrapping_add(1), xb_norm);
                let tab = pullback_attraction_diagnostic(&self.x0, &xb, &self.omega, &run.horizons, &self.solver)?;
                let mut t = Table::new("pullback.csv", &["horizon", "gap"]);
                for (a, b) in tab.horizons.iter().zip(&tab.gap) {
                    t.push_nums(&[*a, *b]);
                }
                let mut tables = vec![t];
                let metric = match &tab.lockstep {
                    Some(l) => {
                        let mut lt = Table::new("lockstep.csv", &["time", "diff"]);
                        for (a, b) in l.times.iter().zip(&l.diff) {
                            lt.push_nums(&[*a, *b]);
                        }
                        tables.push(lt);
                        l.max_increase
                    }
                    None => 0.0,
                };
                Ok((CheckOutcome::at_most(kind, metric, tol, tab.decreasing, &tab)?, tables))
            }
        }
    }

    fn inequality_reports(&self, seeds: &[u64]) -> Result<Vec<InequalityReport>> {
        let p = &self.config.params;
        let mut out = vec![sweep_ladyzhenskaya(&self.domain, seeds)?, sweep_b_dual(&self.domain, seeds)?];
        out.extend(sweep_monotonicity_c(&self.domain, p.r, seeds)?);
        if p.r > 3.0 {
            out.push(sweep_b_interpolated(&self.domain, p.r, seeds)?);
        }
        out.push(sweep_local_monotonicity_g(&self.domain, p, seeds)?);
        Ok(out)
    }

    fn ou_statistics(&self, spec: &CheckSpec, tol: f64) -> Result<(CheckOutcome, Vec<Table>)> {
        let p = &self.config.params;
        let base = self.seed().wrapping_mul(1 << 20);
        let seeds: Vec<u64> = (0..spec.samples.unwrap_or(10_000) as u64).map(|i| base.wrapping_add(i)).collect();
        let n_modes = self.omega.spectrum.n_modes();
        let mut modes = vec![0, 1, n_modes / 2, n_modes - 1];
        modes.dedup();
        let stats = ou_mode_statistics(&self.omega.spectrum, p, self.config.noise.dt, OU_LAG, &seeds, &modes)?;
        let mut t = Table::new(
            "ou_statistics.csv",
            &["mode", "gamma", "var_estimate", "var_exact", "var_std_error", "acov_estimate", "acov_exact", "acov_std_error"],
        );
        let mut worst_z: f64 = 0.0;
        for m in &stats {
            let (v, a) = (m.variance, m.autocovariance);
            worst_z = worst_z.max(v.z_score()).max(a.z_score());
            let mut row = vec![m.mode.to_string()];
            row.extend([m.gamma, v.estimate, v.exact, v.std_error, a.estimate, a.exact, a.std_error].map(num));
            t.push(row);
        }
        let (s, len) = (1.0, self.config.run.t_final);
        let shifted = ou_path(&self.omega.shift(s)?, p, 0.0, len)?;
        let direct = ou_path(&self.omega, p, s, s + len)?;
        let shift_exact = (0..shifted.len()).all(|i| shifted.amps(i) == direct.amps(i));
        let other = PhysicalParams { chi: p.chi + 1.0, ..*p };
        let chi_defect = chi_difference_residual(&ou_path(&self.omega, p, 0.0, len)?, &ou_path(&self.omega, &other, 0.0, len)?)?
            .into_iter()
            .fold(0.0, f64::max);
        let detail = serde_json::json!({
            "modes": stats, "shift_identity_exact": shift_exact, "chi_difference_defect": chi_defect,
        });
        let extra = shift_exact && chi_defect <= CHI_DIFFERENCE_TOL;
        Ok((CheckOutcome::at_most(CheckKind::OuStatistics, worst_z, tol, extra, detail)?, vec![t]))
    }

    /// Ensemble with norms up to `10 κ₁₃` pulled back over a grid reaching `min(3·predicted, max horizon)`.
    fn absorption(&self, spec: &CheckSpec, tol: f64) -> Result<(CheckOutcome, Vec<Table>)> {
        let run = &self.config.run;
        let hmax = run.horizons.last().copied().unwrap_or(run.t_final);
        let series = self.norm_series(0.0)?;
        let kappa = self.kappa_at(&series, 0.0, DEFAULT_TAIL_TOL)?;
        let rho = 10.0 * kappa.kappa13;
        let n = run.ensemble_size;
        let xs: Vec<SpectralField> = (0..n)
            .map(|i| random_field(&self.domain, run.initial.seed.wrapping_add(1000 + i as u64), rho * (i + 1) as f64 / n as f64))
            .collect();
        let predicted = (2.0 * rho * rho / kappa.kappa11.powi(2)).ln() / self.config.params.alpha;
        let step = spec.step.unwrap_or(0.1);
        let reach = (tol * predicted).min(hmax);
        let mut horizons: Vec<f64> = (1..).map(|i| i as f64 * step).take_while(|&h| h <= reach + 1e-9).collect();
        let top = horizons.last().copied().unwrap_or(0.0);
        horizons.extend(run.horizons.iter().filter(|&&h| h > top + 1e-9));
        let ledger = check_absorption(&xs, &self.omega, &horizons, &kappa, &self.solver)?;
        let mut t = Table::new("absorption.csv", &["horizon", "max_norm", "ball"]);
        for (a, b) in ledger.horizons.iter().zip(&ledger.max_norm) {
            t.push_nums(&[*a, *b, kappa.kappa13]);
        }
        let ratio = match ledger.t_d {
            Some(td) if td > 0.0 && predicted > 0.0 => (td / predicted).max(predicted / td),
            _ => f64::INFINITY,
        };
        Ok((CheckOutcome::at_most(CheckKind::Absorption, ratio, tol, ledger.absorbed(), &ledger)?, vec![t]))
    }
}

/// Columns of `norms.csv`.
pub const NORM_COLUMNS: [&str; 6] = ["time", "u_h", "u_v", "u_lr1", "v_h", "upsilon_h"];

/// `‖u‖_H`, `‖u‖_V`, `‖u‖_{L^{r+1}}`, `‖v‖_H`, `‖Υ‖_H` at each stored time.
pub fn norms_table(traj: &Trajectory, r: f64) -> Table {
    let mut t = Table::new("norms.csv", &NORM_COLUMNS);
    for i in 0..traj.times.len() {
        let u = traj.u(i);
        t.push_nums(&[
            traj.times[i],
            h_norm(&u),
            v_norm(&u),
            lp_norm(&u, r + 1.0),
            h_norm(&traj.states[i]),
            h_norm(&traj.upsilon[i]),
        ]);
    }
    t
}
