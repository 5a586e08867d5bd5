use std::fs;

use proptest::prelude::*;
use scbf_core::harness::*;

fn small() -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.domain.grid_n = 16;
    c.run.t_final = 0.25;
    c.run.dt = 5e-3;
    c.noise.dt = 2.5e-3;
    c.run.store_every = 25;
    c
}

#[test]
fn identical_configs_write_identical_directories() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        let exp = Experiment::new(small()).unwrap();
        let out = execute(&exp).unwrap();
        write_run(dir.path(), &exp, &out).unwrap();
    }
    let m = fs::read_to_string(a.path().join("manifest.json")).unwrap();
    assert_eq!(m, fs::read_to_string(b.path().join("manifest.json")).unwrap());
    let man: Manifest = serde_json::from_str(&m).unwrap();
    assert!(man.files.contains_key("ledger.csv") && man.files.contains_key("fields/0000.snap"));
    for f in man.files.keys() {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn every_csv_carries_the_config_hash_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let exp = Experiment::new(small()).unwrap();
    let out = execute(&exp).unwrap();
    write_run(dir.path(), &exp, &out).unwrap();
    let tag = format!("# config_hash={} seed={}", exp.hash, exp.seed());
    for e in fs::read_dir(dir.path()).unwrap() {
        let p = e.unwrap().path();
        if p.extension().is_some_and(|x| x == "csv") {
            assert_eq!(fs::read_to_string(&p).unwrap().lines().next().unwrap(), tag, "{p:?}");
        }
    }
}

#[test]
fn critical_three_dimensional_pullback_records_lockstep() {
    let text = fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/critical_3d.toml")).unwrap();
    let mut c = ExperimentConfig::from_toml(&text).unwrap();
    c.domain.grid_n = 8;
    c.run.horizons = vec![0.5, 1.0];
    c.run.t_final = 0.1;
    let exp = Experiment::new(c).unwrap();
    let out = execute(&exp).unwrap();
    assert!(out.report.passed, "{:?}", out.report.checks);
    assert!(out.tables.iter().any(|t| t.file == "lockstep.csv"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn axis_edits_round_trip_through_toml(
        axis in prop::sample::select(vec!["mu", "alpha", "beta", "chi", "noise.base_amp", "initial.norm"]),
        value in 0.01f64..5.0,
    ) {
        let c = small().with_axis(axis, value).unwrap();
        let back = ExperimentConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(back.hash(), c.hash());
        prop_assert_ne!(c.hash(), small().with_axis(axis, value * 1.5).unwrap().hash());
    }
}
