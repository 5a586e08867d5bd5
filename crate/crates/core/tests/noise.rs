use std::sync::Arc;

use proptest::prelude::*;
use scbf_core::noise::*;
use scbf_core::spectral::{Domain, DomainSpec, PhysicalParams};

const DT: f64 = 0.01;

fn spectrum(amp: f64) -> Arc<ColoringSpectrum> {
    let dom = Domain::new(DomainSpec::cube(2, 16)).unwrap();
    Arc::new(ColoringSpectrum::build(&dom, 0.25, amp, 1.0).unwrap())
}

fn params(chi: f64) -> PhysicalParams {
    PhysicalParams { mu: 0.2, alpha: 0.5, beta: 0.5, r: 3.0, chi }
}

fn omega(seed: u64) -> Omega {
    Omega::new(spectrum(1.0), WienerPath::new(seed, DT).unwrap().with_anchor_time(-5.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn draws_are_pure_functions_of_the_step(seed in any::<u64>(), n in -10_000i64..10_000, len in 1usize..8) {
        let w = WienerPath::new(seed, DT).unwrap();
        let block = w.gaussians(n, len);
        prop_assert_eq!(block.len(), len);
        prop_assert_eq!(&w.shift(3.0 * DT).unwrap().gaussians(n - 3, len), &block);
        let inc = w.increments(n, len);
        for (g, i) in block.iter().zip(&inc) {
            prop_assert!((g * DT.sqrt() - i).abs() <= 1e-15 * g.abs().max(1.0));
        }
    }

    #[test]
    fn shifts_compose(seed in any::<u64>(), a in 0u32..100, b in 0u32..100) {
        let om = omega(seed);
        let (sa, sb) = (a as f64 * DT, b as f64 * DT);
        let once = ou_path(&om.shift(sa + sb).unwrap(), &params(0.0), 0.0, 0.1).unwrap();
        let twice = ou_path(&om.shift(sa).unwrap().shift(sb).unwrap(), &params(0.0), 0.0, 0.1).unwrap();
        for i in 0..once.len() {
            prop_assert_eq!(once.amps(i), twice.amps(i));
        }
    }

    #[test]
    fn path_states_do_not_depend_on_the_window(seed in any::<u64>(), lo in 0u32..100, len in 1u32..100) {
        let om = omega(seed);
        let p = params(0.3);
        let wide = ou_path(&om, &p, -1.0, 2.0).unwrap();
        let t0 = -1.0 + lo as f64 * DT;
        let narrow = ou_path(&om, &p, t0, t0 + len as f64 * DT).unwrap();
        for i in 0..narrow.len() {
            prop_assert_eq!(narrow.amps(i), wide.amps(wide.index_at(narrow.time(i)).unwrap()));
        }
    }
}

#[test]
fn continuation_from_a_state_matches_one_long_path() {
    let om = omega(4);
    let p = params(0.0);
    let whole = ou_path(&om, &p, 0.0, 1.0).unwrap();
    let head = ou_path(&om, &p, 0.0, 0.5).unwrap();
    let tail = ou_path_from_state(&om, &p, 0.5, 1.0, head.amps(head.len() - 1)).unwrap();
    assert_eq!(tail.amps(tail.len() - 1), whole.amps(whole.len() - 1));
}

#[test]
fn zero_amplitude_gives_a_zero_path() {
    let om = Omega::new(spectrum(0.0), WienerPath::new(1, DT).unwrap());
    let path = ou_path(&om, &params(0.0), -1.0, 1.0).unwrap();
    assert!((0..path.len()).all(|i| path.amps(i).iter().all(|&a| a == 0.0)));
}

#[test]
fn chi_difference_defect_is_at_rounding_level() {
    let om = omega(8);
    let res = chi_difference_residual(
        &ou_path(&om, &params(0.0), 0.0, 1.0).unwrap(),
        &ou_path(&om, &params(2.0), 0.0, 1.0).unwrap(),
    )
    .unwrap();
    assert!(res.iter().all(|&r| r <= 1e-10), "{:?}", res.iter().cloned().fold(0.0, f64::max));
}

#[test]
fn windows_before_the_anchor_are_rejected() {
    let om = omega(1);
    assert!(ou_path(&om, &params(0.0), -6.0, 0.0).is_err());
    assert!(ou_path(&om.with_history_to(-6.0), &params(0.0), -6.0, 0.0).is_ok());
}

#[test]
fn ergodic_l4_average_approaches_its_expectation() {
    let sp = spectrum(1.0);
    let p = params(0.5);
    let om = Omega::new(sp.clone(), WienerPath::new(2, 0.05).unwrap().with_anchor_time(0.0));
    let path = ou_path(&om, &p, 0.0, 400.0).unwrap();
    let avg = ergodic_average(&path, 4.0, 4.0).unwrap();
    let exact = sp.expected_lp_moment(p.mu, p.chi, 4.0);
    assert!((avg / exact - 1.0).abs() < 0.1, "{avg} vs {exact}");
}
