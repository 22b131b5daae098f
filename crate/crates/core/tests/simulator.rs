use ardm::sim::{format_trace, replay_trace, simulate, simulate_with, SimOptions};
use ardm::strategy::{analytic_pe, Strategy, StrategySpec};
use ardm::{IncrementSchedule, SystemParams, ThresholdPolicy};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn equal_seeds_give_equal_reports(seed in any::<u64>(), lambda in 3.0f64..15.0) {
        let p = SystemParams::reference(lambda).with_hitting(vec![0.9, 0.1]);
        let spec = StrategySpec::build(Strategy::S5, &p).unwrap();
        let a = simulate(&spec, &p, 20_000, seed).unwrap();
        prop_assert_eq!(&a, &simulate(&spec, &p, 20_000, seed).unwrap());
        prop_assert_eq!(a.ber, a.errors as f64 / 20_000.0);
        prop_assert!((a.ci_half_width - 1.96 * (a.ber * (1.0 - a.ber) / 20_000.0).sqrt()).abs() < 1e-18);
    }
}

#[test]
fn solver_schedules_never_leave_storage() {
    let p = SystemParams::reference(15.0);
    std::thread::scope(|scope| {
        for s in [Strategy::S2, Strategy::S3, Strategy::S4] {
            let p = &p;
            scope.spawn(move || {
                let spec = StrategySpec::build(s, p).unwrap();
                let r = simulate(&spec, p, 10_000_000, 77).unwrap();
                assert_eq!(r.feasibility_violations, 0);
            });
        }
    });
}

#[test]
fn error_propagation_gap_is_small() {
    let p = SystemParams::reference(15.0);
    let spec = StrategySpec::build(Strategy::S3, &p).unwrap();
    let pe = analytic_pe(&spec, &p).unwrap().pe.unwrap();
    let n = 10_000_000;
    let opts = SimOptions {
        genie: true,
        ..SimOptions::default()
    };
    let (tracked, genie) = std::thread::scope(|scope| {
        let t = scope.spawn(|| simulate(&spec, &p, n, 5).unwrap());
        let g = simulate_with(&spec, &p, n, 5, &opts).unwrap();
        (t.join().unwrap(), g)
    });
    let ci = 1.96 * (pe * (1.0 - pe) / n as f64).sqrt();
    let gap = tracked.ber - pe;
    eprintln!(
        "S3 tracked {:.3e} genie {:.3e} analytic {pe:.3e} gap {gap:.2e} ({:.2} half-widths)",
        tracked.ber,
        genie.ber,
        gap / ci
    );
    assert!(gap.abs() < 10.0 * ci);
    assert!(tracked.errors >= genie.errors.saturating_sub(genie.errors / 2));
}

#[test]
fn genie_differs_once_errors_propagate() {
    // strongly state-dependent thresholds make a wrong state estimate costly
    let p = SystemParams::reference(15.0);
    let spec = StrategySpec {
        name: Strategy::S2,
        schedule: IncrementSchedule::zero(),
        policy: ThresholdPolicy::PerState {
            values: vec![20.0, 60.0],
            tail: 60.0,
        },
        memory: 0,
    };
    let opts = SimOptions {
        genie: true,
        ..SimOptions::default()
    };
    let tracked = simulate(&spec, &p, 200_000, 3).unwrap();
    let genie = simulate_with(&spec, &p, 200_000, 3, &opts).unwrap();
    assert_ne!(tracked.errors, genie.errors);
    assert!(genie.genie && !tracked.genie);
}

#[test]
fn quiet_channel_matches_analysis() {
    let p = SystemParams::reference(0.05);
    for s in [Strategy::S1, Strategy::S4] {
        let spec = StrategySpec::build(s, &p).unwrap();
        let pe = analytic_pe(&spec, &p).unwrap().pe.unwrap();
        let r = simulate(&spec, &p, 100_000, 1).unwrap();
        assert!(pe < 1e-12 && r.errors == 0);
    }
}

#[test]
fn trace_round_trip() {
    let p = SystemParams::reference(15.0).with_hitting(vec![0.85, 0.1, 0.05]);
    let spec = StrategySpec::build(Strategy::S1, &p).unwrap();
    let t = replay_trace(&spec, &p, 1_000, 9).unwrap();
    let r = simulate(&spec, &p, 1_000, 9).unwrap();
    assert_eq!(t.len(), 1_000);
    assert_eq!(
        t.iter().filter(|e| e.bit != e.decoded).count() as u64,
        r.errors
    );
    let text = format_trace(&t);
    assert_eq!(text.lines().nth(1).unwrap().split('\t').count(), 9);
    // the mean adds interference from the two previous releases
    for w in t.windows(3) {
        let expect = p.lambda + 0.85 * w[2].released + 0.1 * w[1].released + 0.05 * w[0].released;
        assert!((w[2].mean - expect).abs() < 1e-9);
    }
}
