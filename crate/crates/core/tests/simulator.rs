use ehrelay::regions::{relay_branch_prob, saturated_service};
use ehrelay::sim::{
    classify_stability, empirical_rates, run, ClassifierConfig, Mode, SimState, Simulation, Verdict,
};
use ehrelay::{RatePoint, SystemParams};
use proptest::prelude::*;

fn canonical() -> SystemParams {
    SystemParams {
        lambda_s: 0.1,
        lambda_r: 0.05,
        delta_s: 0.6,
        delta_r: 0.3,
        q_s: 0.5,
        q_r: 0.5,
        p_sd: 0.4,
        p_rd: 0.8,
        p_sr: 0.5,
    }
}

#[test]
fn no_arrivals_no_departures() {
    let p = canonical().with_rates(RatePoint::ORIGIN);
    for seed in [1, 2, 3] {
        let s = run(&p, Mode::Original, seed, 10_000, 100);
        assert_eq!(s.s_departures, 0);
        assert_eq!(s.r_departures, 0);
        assert_eq!(s.final_state.total_queue(), 0);
    }
}

#[test]
fn always_on_nodes_collide_from_the_second_slot() {
    let p = SystemParams {
        delta_s: 1.0,
        delta_r: 1.0,
        q_s: 1.0,
        q_r: 1.0,
        ..canonical()
    };
    let s = run(&p, Mode::Saturated, 9, 1000, 10);
    assert_eq!(s.collisions, 999);
    assert_eq!(s.s_departures + s.r_departures, 0);
    assert!(s.conservation_holds());
}

#[test]
fn saturated_throughput_matches_closed_form() {
    let p = canonical();
    let want = saturated_service(&p);
    let r = empirical_rates(&run(&p, Mode::Saturated, 11, 1_000_000, 1000));
    assert!((r.mu_s - 0.245).abs() <= 0.01, "{}", r.mu_s);
    assert!((r.mu_r - 0.12).abs() <= 0.01, "{}", r.mu_r);
    assert!((want.mu_s - 0.245).abs() < 1e-12 && (want.mu_r - 0.12).abs() < 1e-12);
}

#[test]
fn battery_occupancy_matches_rate_balance() {
    let p = SystemParams {
        delta_s: 0.3,
        q_s: 0.6,
        ..canonical()
    };
    let r = empirical_rates(&run(&p, Mode::Saturated, 12, 1_000_000, 1000));
    assert!(
        (r.s_battery_fraction - 0.5).abs() <= 0.005,
        "{}",
        r.s_battery_fraction
    );
}

#[test]
fn handover_fraction_matches_branch_probability() {
    let p = canonical();
    let s = run(&p, Mode::Saturated, 13, 1_000_000, 1000);
    let measured = s.handovers as f64 / s.s_departures as f64;
    let want = relay_branch_prob(&p).unwrap();
    assert!((want - 3.0 / 7.0).abs() < 1e-12);
    assert!((measured - want).abs() < 0.01, "{measured} vs {want}");
}

#[test]
fn dom_source_relay_service() {
    // With the relay battery topped up (delta_r >= q_r) the busy-slot
    // service of the relay equals its saturated throughput.
    let p = SystemParams {
        delta_r: 0.6,
        lambda_s: 0.04,
        lambda_r: 0.05,
        ..canonical()
    };
    let r = empirical_rates(&run(&p, Mode::DomSource, 14, 1_000_000, 1000));
    let want = saturated_service(&p).mu_r;
    assert!((want - 0.2).abs() < 1e-12);
    assert!(
        (r.r_busy_service - want).abs() <= 0.01,
        "{}",
        r.r_busy_service
    );
}

#[test]
fn runs_are_reproducible() {
    let p = canonical();
    for mode in Mode::ALL {
        let a = run(&p, mode, 77, 50_000, 500);
        let b = run(&p, mode, 77, 50_000, 500);
        assert_eq!(a, b, "{mode}");
        let c = run(&p, mode, 78, 50_000, 500);
        assert_ne!(a.queue_trace, c.queue_trace, "{mode}");
    }
}

#[test]
fn classifier_examples() {
    let cfg = ClassifierConfig::default();
    let empty = classify_stability(&canonical().with_rates(RatePoint::ORIGIN), 1, &cfg).unwrap();
    assert_eq!(empty.verdict, Verdict::Stable);
    assert_eq!(empty.drift_slope, 0.0);

    let starved = SystemParams {
        delta_s: 0.0,
        lambda_r: 0.0,
        ..canonical()
    };
    let v = classify_stability(&starved, 2, &cfg).unwrap();
    assert_eq!(v.verdict, Verdict::Unstable);
    assert!((v.drift_slope - 0.1).abs() < 0.005, "{}", v.drift_slope);

    let v = classify_stability(&canonical(), 3, &cfg).unwrap();
    assert_eq!(v.verdict, Verdict::Stable, "{v:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn slot_invariants_hold_every_slot(
        ls in 0.0..=1.0f64, lr in 0.0..=1.0f64,
        ds in 0.0..=1.0f64, dr in 0.0..=1.0f64,
        qs in 0.0..=1.0f64, qr in 0.0..=1.0f64,
        psd in 0.0..0.9f64, gap in 0.01..=1.0f64, psr in 0.0..=1.0f64,
        mode_ix in 0usize..4, seed in any::<u64>(),
        q0 in 0u64..4, b0 in 0u64..4,
    ) {
        let p = SystemParams {
            lambda_s: ls, lambda_r: lr, delta_s: ds, delta_r: dr, q_s: qs, q_r: qr,
            p_sd: psd, p_rd: psd + gap * (1.0 - psd), p_sr: psr,
        };
        let mode = Mode::ALL[mode_ix];
        let start = SimState { q_s: q0, q_r: q0, b_s: b0, b_r: b0, slot: 0 };
        let mut sim = Simulation::from_state(p, mode, seed, start);
        for _ in 0..300 {
            let before = *sim.state();
            let o = sim.step();
            let after = *sim.state();
            prop_assert!(sim.stats().conservation().is_ok());
            // Half duplex: a relay that transmits cannot also receive.
            prop_assert!(!(o.r_transmitted && o.s_to_r));
            // Transmitting needs a stored energy unit.
            prop_assert!(!o.s_transmitted || before.b_s > 0);
            prop_assert!(!o.r_transmitted || before.b_r > 0);
            prop_assert_eq!(o.collision, o.s_transmitted && o.r_transmitted);
            prop_assert!(!(o.s_to_d && o.s_to_r));
            prop_assert!(after.q_s <= before.q_s + 2 && after.b_s <= before.b_s + 1);
            prop_assert_eq!(after.slot, before.slot + 1);
        }
    }
}
