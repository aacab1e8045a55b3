use proptest::prelude::*;

use sasoc::model::{fixtures, ArrivalProfile};
use sasoc::{ServiceSystem, SystemConfig, WorkerParam};

fn scaled(mut cfg: SystemConfig, factor: f64) -> SystemConfig {
    for c in &mut cfg.customers {
        c.arrivals = c.arrivals.scaled(factor);
    }
    cfg
}

proptest! {
    #[test]
    fn w_sum_is_monotone(base in prop::collection::vec(0u32..=5, 4), bump in prop::collection::vec(0u32..=3, 4)) {
        let lo = WorkerParam(base.clone());
        let hi = WorkerParam(base.iter().zip(&bump).map(|(b, d)| b + d).collect());
        prop_assert!(lo.w_sum() <= hi.w_sum());
    }

    #[test]
    fn workload_weights_ignore_uniform_rate_scaling(factor in 0.05f64..20.0) {
        for cfg in [fixtures::two_by_two(), fixtures::three_shift()] {
            let a = ServiceSystem::new(cfg.clone()).unwrap().workload_weights().unwrap();
            let b = ServiceSystem::new(scaled(cfg, factor)).unwrap().workload_weights().unwrap();
            for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                prop_assert!((x - y).abs() <= 1e-12, "{x} vs {y}");
            }
        }
    }
}

#[test]
fn validation_is_idempotent() {
    for cfg in [fixtures::two_by_two(), fixtures::three_shift(), fixtures::single_server(1.0)] {
        let once = cfg.validate().unwrap();
        let twice = once.clone().validate().unwrap();
        assert_eq!(once, twice);
    }
}

#[test]
fn config_round_trips_through_toml() {
    for cfg in [fixtures::two_by_two(), fixtures::three_shift()] {
        let cfg = cfg.validate().unwrap();
        let back = SystemConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back.validate().unwrap(), cfg);
    }
}

#[test]
fn shipped_fixture_files_match_builders() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");
    for (file, cfg) in [("two_by_two.toml", fixtures::two_by_two()), ("three_shift.toml", fixtures::three_shift())] {
        let loaded = SystemConfig::load(format!("{dir}/{file}")).unwrap();
        assert_eq!(loaded.validate().unwrap(), cfg.validate().unwrap(), "{file}");
    }
}

#[test]
fn flat_profile_has_constant_rate() {
    let p = ArrivalProfile::Flat(0.7);
    assert!((0..168).all(|h| p.rate(h) == 0.7));
}
