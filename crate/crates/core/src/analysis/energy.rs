use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::solver::{EnergyLedger, Trajectory};
use crate::spectral::PhysicalParams;

/// Per-row residual of the energy equality along a run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnergyResidual {
    pub times: Vec<f64>,
    /// `|LHS(t_n) - RHS(t_n)|` with left-point time integrals.
    pub residual: Vec<f64>,
    pub max: f64,
    /// `max` over the largest magnitude entering the balance.
    pub relative_max: f64,
    /// Largest one-step increase of `‖v‖²_H`, over `‖v(t_0)‖²_H`.
    pub max_step_increase: f64,
}

fn validate_ledger(ledger: &EnergyLedger) -> Result<()> {
    let rows = &ledger.rows;
    if rows.is_empty() {
        return Err(invalid("ledger", "no rows"));
    }
    let t0 = rows[0].time;
    for (i, row) in rows.iter().enumerate() {
        if row.step != i {
            return Err(invalid("ledger", format!("row {i} carries step {}; rows are missing", row.step)));
        }
        let expect = t0 + i as f64 * ledger.dt;
        if (row.time - expect).abs() > 1e-9 * expect.abs().max(1.0) {
            return Err(invalid("ledger", format!("row {i} at t = {} is off the dt grid", row.time)));
        }
    }
    Ok(())
}

/// Residual of `‖v(t)‖² + 2μ∫‖v‖²_V + 2α∫‖v‖²_H = ‖v(0)‖² - 2∫⟨B(v+Υ),v⟩ - 2β∫⟨C(v+Υ),v⟩ + 2∫⟨f,v⟩ + 2(χ-α)∫(Υ,v)`.
pub fn check_energy_equality(ledger: &EnergyLedger) -> Result<EnergyResidual> {
    validate_ledger(ledger)?;
    let p = &ledger.params;
    let dt = ledger.dt;
    let rows = &ledger.rows;
    let e0 = rows[0].v_h2;
    let (mut lhs_int, mut rhs_int, mut abs_int) = (0.0, 0.0, 0.0);
    let mut times = Vec::with_capacity(rows.len());
    let mut residual = Vec::with_capacity(rows.len());
    let mut scale: f64 = e0;
    for (i, row) in rows.iter().enumerate() {
        if i > 0 {
            let prev = &rows[i - 1];
            let dissip = p.mu * prev.v_v2 + p.alpha * prev.v_h2;
            let work = [
                prev.b_w_v_ups,
                -p.beta * prev.c_w_v,
                prev.f_v,
                (p.chi - p.alpha) * prev.ups_v,
            ];
            lhs_int += 2.0 * dt * dissip;
            rhs_int += 2.0 * dt * work.iter().sum::<f64>();
            abs_int += 2.0 * dt * (dissip + work.iter().map(|x| x.abs()).sum::<f64>());
        }
        let lhs = row.v_h2 + lhs_int;
        let rhs = e0 + rhs_int;
        times.push(row.time);
        residual.push((lhs - rhs).abs());
        scale = scale.max(e0 + abs_int).max(row.v_h2);
    }
    let max = residual.iter().cloned().fold(0.0, f64::max);
    let max_step_increase = rows
        .windows(2)
        .map(|w| w[1].v_h2 - w[0].v_h2)
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0);
    Ok(EnergyResidual {
        times,
        residual,
        max,
        relative_max: if scale > 0.0 { max / scale } else { 0.0 },
        max_step_increase: if e0 > 0.0 { max_step_increase / e0 } else { max_step_increase },
    })
}

/// Which form of the a priori bound applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AprioriBranch {
    /// `d = 2`, `r < 3`: exponent carries `R∫‖Υ‖⁴_{L⁴}`.
    Weighted,
    /// `r ≥ 3`: plain exponential decay at rate `2α`.
    Plain,
}

/// Explicit admissible constant `C` of the a priori bound, built from the Young-inequality steps.
///
/// The growth of `‖v‖²` is bounded by `2(c_h‖Υ‖²_H + c_4‖Υ‖⁴_{L⁴} + c_r‖Υ‖^{r+1}_{L^{r+1}} + c_f‖f‖²_{V'})`
/// and `C = 2 max(c_h, c_4, c_r, c_f)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AprioriConstant {
    pub branch: AprioriBranch,
    /// `R = 729/(8μ³)` on the weighted branch, 0 otherwise.
    pub growth: f64,
    pub c: f64,
    pub c_h: f64,
    pub c_4: f64,
    pub c_r: f64,
    pub c_f: f64,
}

pub fn apriori_constant(params: &PhysicalParams, dim: usize, lambda1: f64) -> Result<AprioriConstant> {
    params.regime(dim)?;
    let PhysicalParams { mu, alpha, beta, r, chi } = *params;
    // |β⟨C(w),Υ⟩| ≤ (β/4)‖w‖^{r+1} + k2‖Υ‖^{r+1}.
    let k2 = beta * (4.0 * r / (r + 1.0)).powf(r) / (r + 1.0);
    // |⟨(χ-α)Υ - B(Υ) + f, v⟩| ≤ (μ/4)‖v‖²_V + (3/μ)((χ-α)²‖Υ‖²_{V'} + ‖Υ‖⁴_{L⁴} + ‖f‖²_{V'}).
    let c_h0 = 3.0 / mu * (chi - alpha).powi(2) / lambda1;
    let (c_4, c_f) = (3.0 / mu, 3.0 / mu);
    let (branch, growth, c_h, c_r) = if r < 3.0 {
        (AprioriBranch::Weighted, params.growth_constant(), c_h0, k2)
    } else {
        // ‖w‖_{L^{r+1}}‖v‖_V X ≤ (β/4)‖w‖^{r+1} + (μ/8)‖v‖²_V + k1 X^q, q = 2(r+1)/(r-1),
        // X^q ≤ w1‖Υ‖^{r+1}_{L^{r+1}} + w2‖Υ‖²_H.
        let q = 2.0 * (r + 1.0) / (r - 1.0);
        let a = (beta * (r + 1.0) / 4.0).powf(1.0 / (r + 1.0));
        let b = (mu / 4.0).sqrt();
        let k1 = (a * b).powf(-q) / q;
        let w1 = 4.0 / (r - 1.0).powi(2);
        let w2 = (r + 1.0) * (r - 3.0) / (r - 1.0).powi(2);
        // (2/μ)‖Υ‖^{2(r+1)/(r-1)}_{L^{r+1}}‖Υ‖^{2(r-3)/(r-1)}_H split by Young.
        let c_h = c_h0 + k1 * w2 + 2.0 / mu * (r - 3.0) / (r - 1.0);
        let c_r = k1 * w1 + 4.0 / (mu * (r - 1.0)) + k2;
        (AprioriBranch::Plain, 0.0, c_h, c_r)
    };
    let c = 2.0 * c_h.max(c_4).max(c_r).max(c_f);
    Ok(AprioriConstant { branch, growth, c, c_h, c_4, c_r, c_f })
}

/// Both sides of the a priori bound along a run, with `τ` the first ledger time.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AprioriReport {
    pub constant: AprioriConstant,
    pub times: Vec<f64>,
    pub lhs: Vec<f64>,
    /// `‖v(τ)‖² e^{-2α(t-τ) + R∫‖Υ‖⁴}`.
    pub rhs_initial: Vec<f64>,
    /// `C∫[‖Υ‖²_H + ‖Υ‖⁴_{L⁴} + ‖Υ‖^{r+1}] e^{…}`.
    pub rhs_noise: Vec<f64>,
    /// `C‖f‖²_{V'}∫e^{…}`.
    pub rhs_forcing: Vec<f64>,
    /// `(lhs - rhs) / rhs`.
    pub margin: Vec<f64>,
    /// Allowed relative excess `e^{α² dt (t-τ)} - 1`, the gap between implicit-Euler and exact decay.
    pub slack: Vec<f64>,
    /// Largest `margin - slack`.
    pub worst_excess: f64,
    pub passed: bool,
}

const ROUNDING_SLACK: f64 = 1e-12;

pub fn check_apriori_bound(traj: &Trajectory) -> Result<AprioriReport> {
    let dom = traj.states.first().ok_or_else(|| invalid("trajectory", "no stored states"))?.domain();
    check_apriori_ledger(&traj.ledger, dom.dim(), dom.lambda1())
}

/// [`check_apriori_bound`] on a bare ledger, for runs read back from disk.
pub fn check_apriori_ledger(ledger: &EnergyLedger, dim: usize, lambda1: f64) -> Result<AprioriReport> {
    validate_ledger(ledger)?;
    let p = &ledger.params;
    let k = apriori_constant(p, dim, lambda1).map_err(|e| match e {
        Error::Inadmissible(m) => Error::Inadmissible(format!("a priori bound has no branch here: {m}")),
        other => other,
    })?;
    let dt = ledger.dt;
    let rows = &ledger.rows;
    let e0 = rows[0].v_h2;
    let n = rows.len();
    let (mut log_decay, mut noise, mut forcing) = (0.0, 0.0, 0.0);
    let mut rep = AprioriReport {
        constant: k,
        times: Vec::with_capacity(n),
        lhs: Vec::with_capacity(n),
        rhs_initial: Vec::with_capacity(n),
        rhs_noise: Vec::with_capacity(n),
        rhs_forcing: Vec::with_capacity(n),
        margin: Vec::with_capacity(n),
        slack: Vec::with_capacity(n),
        worst_excess: f64::NEG_INFINITY,
        passed: true,
    };
    for (i, row) in rows.iter().enumerate() {
        if i > 0 {
            let prev = &rows[i - 1];
            let step = (-2.0 * p.alpha + k.growth * prev.ups_l4_4) * dt;
            let g = (step).exp();
            noise = g * (noise + k.c * (prev.ups_h2 + prev.ups_l4_4 + prev.ups_lr1) * dt);
            forcing = g * (forcing + k.c * ledger.f_vprime_sq * dt);
            log_decay += step;
        }
        let initial = if e0 == 0.0 { 0.0 } else { e0 * log_decay.exp() };
        let rhs = initial + noise + forcing;
        let elapsed = row.time - rows[0].time;
        let slack = (p.alpha * p.alpha * dt * elapsed).exp_m1() + ROUNDING_SLACK;
        let margin = if rhs > 0.0 {
            (row.v_h2 - rhs) / rhs
        } else if row.v_h2 == 0.0 {
            0.0
        } else {
            f64::MAX
        };
        rep.worst_excess = rep.worst_excess.max(margin - slack);
        rep.passed &= margin <= slack;
        rep.times.push(row.time);
        rep.lhs.push(row.v_h2);
        rep.rhs_initial.push(initial);
        rep.rhs_noise.push(noise);
        rep.rhs_forcing.push(forcing);
        rep.margin.push(margin);
        rep.slack.push(slack);
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    use crate::noise::{ou_path, ColoringSpectrum, Omega, WienerPath};
    use crate::solver::{solve_transformed, SolverConfig};
    use crate::spectral::{random_field, shear_field, Domain, DomainSpec, SpectralField};

    fn omega(dom: &Arc<Domain>, amp: f64, seed: u64) -> Omega {
        let sp = ColoringSpectrum::build(dom, 0.25, amp, 1.0).unwrap();
        Omega::new(Arc::new(sp), WienerPath::new(seed, 0.005).unwrap().with_anchor_time(-2.0))
    }

    fn run(p: PhysicalParams, dt: f64, amp: f64, v0: &SpectralField, f: Option<SpectralField>) -> Trajectory {
        let om = omega(v0.domain(), amp, 3);
        let ou = ou_path(&om, &p, 0.0, 1.0).unwrap();
        let mut cfg = SolverConfig::new(p, dt);
        if let Some(f) = f {
            cfg = cfg.with_forcing(f);
        }
        solve_transformed(v0, &ou, 0.0, 1.0, &cfg).unwrap()
    }

    fn dom() -> Arc<Domain> {
        Domain::new(DomainSpec::cube(2, 16)).unwrap()
    }

    #[test]
    fn zero_trajectory_has_zero_residual() {
        let p = PhysicalParams { mu: 0.3, alpha: 0.5, beta: 0.5, r: 2.0, chi: 0.0 };
        let t = run(p, 0.01, 0.0, &SpectralField::zeros(dom()), None);
        let e = check_energy_equality(&t.ledger).unwrap();
        assert_eq!(e.max, 0.0);
    }

    #[test]
    fn shear_residual_is_first_order() {
        // One Stokes eigenmode, r = 1: the scheme is a scalar recursion.
        let p = PhysicalParams { mu: 0.3, alpha: 0.5, beta: 0.5, r: 1.0, chi: 0.5 };
        let v0 = shear_field(&dom(), 2, 1.0);
        let r1 = check_energy_equality(&run(p, 0.01, 0.0, &v0, None).ledger).unwrap().max;
        let r2 = check_energy_equality(&run(p, 0.005, 0.0, &v0, None).ledger).unwrap().max;
        let ratio = r1 / r2;
        assert!((1.6..2.4).contains(&ratio), "{ratio}");
    }

    #[test]
    fn unforced_energy_never_increases() {
        let p = PhysicalParams { mu: 0.3, alpha: 0.5, beta: 0.5, r: 3.0, chi: 0.0 };
        let t = run(p, 0.01, 0.0, &random_field(&dom(), 4, 3.0), None);
        assert_eq!(check_energy_equality(&t.ledger).unwrap().max_step_increase, 0.0);
    }

    #[test]
    fn missing_rows_are_reported() {
        let p = PhysicalParams { mu: 0.3, alpha: 0.5, beta: 0.5, r: 2.0, chi: 0.0 };
        let mut t = run(p, 0.01, 0.0, &random_field(&dom(), 4, 1.0), None);
        t.ledger.rows.remove(3);
        assert!(check_energy_equality(&t.ledger).is_err());
        t.ledger.rows.clear();
        assert!(check_energy_equality(&t.ledger).is_err());
    }

    #[test]
    fn constants_follow_the_young_steps() {
        let p = PhysicalParams { mu: 0.5, alpha: 1.0, beta: 1.0, r: 2.0, chi: 1.0 };
        let k = apriori_constant(&p, 2, 1.0).unwrap();
        assert_eq!(k.branch, AprioriBranch::Weighted);
        assert_eq!(k.c_h, 0.0);
        // β(4r/(r+1))^r/(r+1) = (8/3)²/3.
        assert!((k.c_r - 64.0 / 27.0).abs() < 1e-14);
        assert_eq!(k.c, 12.0);
        let q = PhysicalParams { r: 3.0, ..p };
        let k3 = apriori_constant(&q, 2, 1.0).unwrap();
        // r = 3: k1 = 16, w1 = 1, w2 = 0, k2 = 27/4.
        assert_eq!(k3.branch, AprioriBranch::Plain);
        assert!((k3.c_r - (20.0 + 27.0 / 4.0)).abs() < 1e-12);
        assert!(apriori_constant(&PhysicalParams { r: 2.0, ..p }, 3, 1.0).is_err());
    }

    #[test]
    fn pure_dissipation_respects_the_bound() {
        let p = PhysicalParams { mu: 0.05, alpha: 1.0, beta: 0.05, r: 2.0, chi: 0.0 };
        let t = run(p, 0.01, 0.0, &shear_field(&dom(), 1, 1.0), None);
        let rep = check_apriori_bound(&t).unwrap();
        assert!(rep.passed, "{}", rep.worst_excess);
        assert!(rep.rhs_noise.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn forcing_contribution_is_quadratic() {
        let p = PhysicalParams { mu: 0.3, alpha: 0.5, beta: 0.5, r: 3.0, chi: 0.0 };
        let v0 = SpectralField::zeros(dom());
        let f = random_field(&dom(), 9, 1.0);
        let a = check_apriori_bound(&run(p, 0.01, 0.5, &v0, Some(f.clone()))).unwrap();
        let b = check_apriori_bound(&run(p, 0.01, 0.5, &v0, Some(f.scaled(2.0)))).unwrap();
        assert!(a.passed && b.passed);
        for (x, y) in a.rhs_forcing.iter().zip(&b.rhs_forcing) {
            assert!((4.0 * x - y).abs() <= 1e-12 * y.abs());
        }
        assert_eq!(a.rhs_noise, b.rhs_noise);
    }
}
