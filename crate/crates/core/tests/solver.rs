use std::sync::Arc;

use proptest::prelude::*;
use scbf_core::noise::*;
use scbf_core::solver::*;
use scbf_core::spectral::*;
use scbf_core::Error;

fn dom() -> Arc<Domain> {
    Domain::new(DomainSpec::cube(2, 16)).unwrap()
}

fn omega(d: &Arc<Domain>, amp: f64, seed: u64) -> Omega {
    let sp = ColoringSpectrum::build(d, 0.25, amp, 1.0).unwrap();
    Omega::new(Arc::new(sp), WienerPath::new(seed, 5e-3).unwrap().with_anchor_time(-8.0))
}

fn params(r: f64) -> PhysicalParams {
    PhysicalParams { mu: 0.2, alpha: 0.5, beta: 0.5, r, chi: 0.0 }
}

#[test]
fn ledger_has_one_row_per_step_plus_one() {
    let d = dom();
    let om = omega(&d, 0.5, 1);
    let ou = ou_path(&om, &params(3.0), 0.0, 0.5).unwrap();
    let x = random_field(&d, 2, 1.0);
    let traj = solve_transformed(&x, &ou, 0.0, 0.5, &SolverConfig::new(params(3.0), 0.01).with_store_every(20)).unwrap();
    assert_eq!(traj.ledger.rows.len(), 51);
    assert_eq!(traj.times.len(), 4);
    assert!((traj.times[3] - 0.5).abs() < 1e-12);
    assert!(traj.ledger.rows.iter().enumerate().all(|(i, r)| r.step == i && r.is_finite()));
}

#[test]
fn linear_shear_decays_at_every_stored_time() {
    let d = dom();
    let p = PhysicalParams { mu: 0.1, alpha: 0.5, beta: 0.4, r: 1.0, chi: 0.0 };
    let om = omega(&d, 0.0, 1);
    let ou = ou_path(&om, &p, 0.0, 1.0).unwrap();
    let v0 = shear_field(&d, 1, 1.0);
    let dt = 5e-3;
    let traj = solve_transformed(&v0, &ou, 0.0, 1.0, &SolverConfig::new(p, dt).with_store_every(20)).unwrap();
    for (t, v) in traj.times.iter().zip(&traj.states) {
        let exact = (-t).exp() * h_norm(&v0);
        assert!((h_norm(v) - exact).abs() <= 3.0 * dt * t * exact + 1e-15, "t = {t}");
    }
}

#[test]
fn pullback_many_matches_single_solves() {
    let d = dom();
    let om = omega(&d, 0.5, 3);
    let cfg = SolverConfig::new(params(2.0), 0.01);
    let xs = [random_field(&d, 1, 1.0), random_field(&d, 2, 3.0)];
    let many = pullback_many(&[0.5, 1.0], &om, &xs, &cfg).unwrap();
    for (h, row) in [0.5, 1.0].iter().zip(&many) {
        for (x, got) in xs.iter().zip(row) {
            assert_eq!(pullback_solve(*h, &om, x, &cfg).unwrap().coeffs(), got.coeffs());
        }
    }
}

#[test]
fn explicit_blow_up_is_reported() {
    let d = dom();
    let om = omega(&d, 0.0, 1);
    let x = random_field(&d, 4, 1e3);
    let cfg = SolverConfig::new(params(3.0), 0.5);
    assert!(matches!(cocycle_phi(20.0, &om, &x, &cfg), Err(Error::Diverged { .. })));
}

#[test]
fn misaligned_steps_are_rejected() {
    let d = dom();
    let om = omega(&d, 0.5, 1);
    let cfg = SolverConfig::new(params(3.0), 0.007);
    assert!(cocycle_phi(0.07, &om, &random_field(&d, 1, 1.0), &cfg).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn cocycle_identity_holds_for_any_split(seed in any::<u64>(), s in 0u32..30, t in 0u32..30) {
        let d = dom();
        let om = omega(&d, 1.0, seed);
        let cfg = SolverConfig::new(params(3.0), 0.01);
        let x = random_field(&d, seed ^ 1, 1.0);
        let (s, t) = (s as f64 * 0.01, t as f64 * 0.01);
        let direct = cocycle_phi(s + t, &om, &x, &cfg).unwrap();
        let mid = cocycle_phi(s, &om, &x, &cfg).unwrap();
        let composed = cocycle_phi(t, &om.shift(s).unwrap(), &mid, &cfg).unwrap();
        prop_assert!(h_norm(&(&direct - &composed)) <= 1e-10 * h_norm(&direct).max(1.0));
    }

    #[test]
    fn states_stay_divergence_free(seed in any::<u64>()) {
        let d = dom();
        let om = omega(&d, 1.0, seed);
        let u = cocycle_phi(0.2, &om, &random_field(&d, seed, 2.0), &SolverConfig::new(params(2.5), 0.01)).unwrap();
        prop_assert!(u.max_divergence_ratio() < 1e-12);
        prop_assert!(u.max_inactive_coeff() == 0.0);
    }
}
