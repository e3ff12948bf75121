use std::io::{self, Write};

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use super::slot::{step, Mode, SimState, SlotDraws, SlotOutcome, DRAWS_PER_SLOT};
use crate::model::SystemParams;

/// The per-run pseudo-random stream.
///
/// Bit-exact contract: xoshiro256++ (`rand_xoshiro` 0.7) seeded by
/// `Xoshiro256PlusPlus::seed_from_u64(seed)`, which fills the 256-bit state
/// from four consecutive SplitMix64 outputs starting at `seed`. One
/// `next_u64` per uniform, mapped to `[0, 1)` as
/// `(x >> 11) as f64 * 2^-53`. Each slot consumes exactly
/// [`DRAWS_PER_SLOT`] uniforms in the order documented on [`SlotDraws`].
pub struct SlotRng(Xoshiro256PlusPlus);

impl SlotRng {
    pub fn new(seed: u64) -> Self {
        Self(Xoshiro256PlusPlus::seed_from_u64(seed))
    }

    pub fn uniform(&mut self) -> f64 {
        const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
        (self.0.next_u64() >> 11) as f64 * SCALE
    }

    pub fn slot_draws(&mut self) -> SlotDraws {
        let mut u = [0.0; DRAWS_PER_SLOT];
        for x in &mut u {
            *x = self.uniform();
        }
        SlotDraws(u)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueueSample {
    pub slot: u64,
    pub q_s: u64,
    pub q_r: u64,
}

/// Counters accumulated over a run.
///
/// Slot-start counters (`*_battery_nonempty_slots`, `*_active_slots`,
/// `*_busy_slots`) describe the state before any transmission in the slot;
/// in saturated mode queues count as nonempty.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimStats {
    pub slots: u64,
    /// Packets that left `Q_S`: direct deliveries plus handovers.
    pub s_departures: u64,
    pub r_departures: u64,
    pub direct_deliveries: u64,
    pub handovers: u64,
    pub collisions: u64,
    pub s_battery_nonempty_slots: u64,
    pub r_battery_nonempty_slots: u64,
    /// Slots with a packet and an energy unit at the source.
    pub s_active_slots: u64,
    pub r_active_slots: u64,
    /// Slots with a packet queued at the source.
    pub s_busy_slots: u64,
    pub r_busy_slots: u64,
    pub s_arrivals: u64,
    pub r_arrivals: u64,
    pub s_injected: u64,
    pub r_injected: u64,
    pub s_harvests: u64,
    pub r_harvests: u64,
    pub s_transmissions: u64,
    pub r_transmissions: u64,
    pub s_dummies: u64,
    pub r_dummies: u64,
    pub initial: SimState,
    pub final_state: SimState,
    /// `(slot, q_s, q_r)` at the start of every `trace_stride`-th slot.
    pub queue_trace: Vec<QueueSample>,
    /// False if any checkpoint failed the conservation identities.
    pub balanced_at_checkpoints: bool,
}

impl SimStats {
    fn new(initial: SimState) -> Self {
        Self {
            initial,
            final_state: initial,
            balanced_at_checkpoints: true,
            ..Default::default()
        }
    }

    fn record(&mut self, before: &SimState, mode: Mode, out: &SlotOutcome, after: &SimState) {
        let saturated = mode == Mode::Saturated;
        let s_busy = saturated || before.q_s > 0;
        let r_busy = saturated || before.q_r > 0;
        self.slots += 1;
        self.s_battery_nonempty_slots += u64::from(before.b_s > 0);
        self.r_battery_nonempty_slots += u64::from(before.b_r > 0);
        self.s_busy_slots += u64::from(s_busy);
        self.r_busy_slots += u64::from(r_busy);
        self.s_active_slots += u64::from(s_busy && before.b_s > 0);
        self.r_active_slots += u64::from(r_busy && before.b_r > 0);

        self.direct_deliveries += u64::from(out.s_to_d);
        self.handovers += u64::from(out.s_to_r);
        self.s_departures += u64::from(out.s_to_d || out.s_to_r);
        self.r_departures += u64::from(out.r_to_d);
        self.collisions += u64::from(out.collision);
        self.s_arrivals += u64::from(out.s_pkt_arrival);
        self.r_arrivals += u64::from(out.r_pkt_arrival);
        self.s_injected += u64::from(out.s_injected);
        self.r_injected += u64::from(out.r_injected);
        self.s_harvests += u64::from(out.s_harvest);
        self.r_harvests += u64::from(out.r_harvest);
        self.s_transmissions += u64::from(out.s_transmitted);
        self.r_transmissions += u64::from(out.r_transmitted);
        self.s_dummies += u64::from(out.s_dummy);
        self.r_dummies += u64::from(out.r_dummy);
        self.final_state = *after;
    }

    /// Checks packet and energy conservation against the current state.
    pub fn conservation(&self) -> Result<(), String> {
        let (init, fin) = (&self.initial, &self.final_state);
        let checks = [
            (
                "source departures = direct + handovers",
                self.s_departures == self.direct_deliveries + self.handovers,
            ),
            (
                "source packets",
                init.q_s + self.s_arrivals + self.s_injected == self.s_departures + fin.q_s,
            ),
            (
                "relay packets",
                init.q_r + self.r_arrivals + self.r_injected + self.handovers
                    == self.r_departures + fin.q_r,
            ),
            (
                "source energy",
                init.b_s + self.s_harvests == self.s_transmissions + fin.b_s,
            ),
            (
                "relay energy",
                init.b_r + self.r_harvests == self.r_transmissions + fin.b_r,
            ),
            ("slot counter", init.slot + self.slots == fin.slot),
        ];
        match checks.iter().find(|(_, ok)| !ok) {
            Some((name, _)) => Err(format!("{name} identity violated at slot {}", fin.slot)),
            None => Ok(()),
        }
    }

    /// Conservation at the end of the run and at every checkpoint.
    pub fn conservation_holds(&self) -> bool {
        self.balanced_at_checkpoints && self.conservation().is_ok()
    }
}

/// A running simulation that owns its generator state.
pub struct Simulation {
    params: SystemParams,
    mode: Mode,
    rng: SlotRng,
    state: SimState,
    stats: SimStats,
}

impl Simulation {
    /// Starts from empty queues and batteries.
    pub fn new(params: SystemParams, mode: Mode, seed: u64) -> Self {
        Self::from_state(params, mode, seed, SimState::default())
    }

    pub fn from_state(params: SystemParams, mode: Mode, seed: u64, state: SimState) -> Self {
        Self {
            params,
            mode,
            rng: SlotRng::new(seed),
            state,
            stats: SimStats::new(state),
        }
    }

    pub fn step(&mut self) -> SlotOutcome {
        let draws = self.rng.slot_draws();
        let before = self.state;
        let (after, out) = step(&before, &self.params, self.mode, &draws);
        self.stats.record(&before, self.mode, &out, &after);
        self.state = after;
        out
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn stats(&self) -> &SimStats {
        &self.stats
    }

    fn checkpoint(&mut self) {
        self.stats.queue_trace.push(QueueSample {
            slot: self.state.slot,
            q_s: self.state.q_s,
            q_r: self.state.q_r,
        });
        if self.stats.conservation().is_err() {
            self.stats.balanced_at_checkpoints = false;
        }
    }

    pub fn into_stats(self) -> SimStats {
        self.stats
    }
}

/// Runs `n_slots` slots from the empty state.
///
/// Identical arguments give identical results. Queue samples and
/// conservation checks are taken every `trace_stride` slots.
pub fn run(
    params: &SystemParams,
    mode: Mode,
    seed: u64,
    n_slots: u64,
    trace_stride: u64,
) -> SimStats {
    let stride = trace_stride.max(1);
    let mut sim = Simulation::new(*params, mode, seed);
    for _ in 0..n_slots {
        sim.step();
        if sim.state().slot.is_multiple_of(stride) {
            sim.checkpoint();
        }
    }
    sim.into_stats()
}

pub const TRACE_HEADER: &str = "slot,q_s,q_r,b_s,b_r,s_tx,r_tx,collision,s_to_d,s_to_r,r_to_d";

/// Like [`run`], additionally writing one CSV row for every slot whose
/// index is a multiple of `trace_stride`. A row holds the slot-start state
/// and that slot's outcome flags as 0/1.
pub fn run_with_trace<W: Write>(
    params: &SystemParams,
    mode: Mode,
    seed: u64,
    n_slots: u64,
    trace_stride: u64,
    mut out: W,
) -> io::Result<SimStats> {
    let stride = trace_stride.max(1);
    let mut sim = Simulation::new(*params, mode, seed);
    writeln!(out, "{TRACE_HEADER}")?;
    for _ in 0..n_slots {
        let before = *sim.state();
        let o = sim.step();
        if before.slot.is_multiple_of(stride) {
            let flag = u8::from;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                before.slot,
                before.q_s,
                before.q_r,
                before.b_s,
                before.b_r,
                flag(o.s_transmitted),
                flag(o.r_transmitted),
                flag(o.collision),
                flag(o.s_to_d),
                flag(o.s_to_r),
                flag(o.r_to_d),
            )?;
        }
        if sim.state().slot.is_multiple_of(stride) {
            sim.checkpoint();
        }
    }
    out.flush()?;
    Ok(sim.into_stats())
}

/// Long-run averages extracted from a run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EmpiricalRates {
    /// Source departures per slot.
    pub mu_s: f64,
    /// Relay departures per slot.
    pub mu_r: f64,
    pub s_battery_fraction: f64,
    pub r_battery_fraction: f64,
    pub s_active_fraction: f64,
    pub r_active_fraction: f64,
    /// Source departures per slot with a queued packet.
    pub s_busy_service: f64,
    /// Relay departures per slot with a queued packet.
    pub r_busy_service: f64,
    /// Source departures per active slot.
    pub s_active_service: f64,
    /// Relay departures per active slot.
    pub r_active_service: f64,
}

pub fn empirical_rates(stats: &SimStats) -> EmpiricalRates {
    let ratio = |num: u64, den: u64| {
        if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let n = stats.slots;
    EmpiricalRates {
        mu_s: ratio(stats.s_departures, n),
        mu_r: ratio(stats.r_departures, n),
        s_battery_fraction: ratio(stats.s_battery_nonempty_slots, n),
        r_battery_fraction: ratio(stats.r_battery_nonempty_slots, n),
        s_active_fraction: ratio(stats.s_active_slots, n),
        r_active_fraction: ratio(stats.r_active_slots, n),
        s_busy_service: ratio(stats.s_departures, stats.s_busy_slots),
        r_busy_service: ratio(stats.r_departures, stats.r_busy_slots),
        s_active_service: ratio(stats.s_departures, stats.s_active_slots),
        r_active_service: ratio(stats.r_departures, stats.r_active_slots),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> SystemParams {
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
    fn uniforms_are_in_unit_interval() {
        let mut rng = SlotRng::new(7);
        for _ in 0..10_000 {
            let u = rng.uniform();
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn empirical_rates_divide_by_slots() {
        let stats = SimStats {
            slots: 100,
            s_departures: 24,
            s_busy_slots: 48,
            ..Default::default()
        };
        let r = empirical_rates(&stats);
        assert_eq!(r.mu_s, 0.24);
        assert_eq!(r.s_busy_service, 0.5);
        assert_eq!(r.r_busy_service, 0.0);
    }

    #[test]
    fn single_idle_slot_gives_zero_rates() {
        let stats = SimStats {
            slots: 1,
            ..Default::default()
        };
        assert_eq!(empirical_rates(&stats), EmpiricalRates::default());
    }

    #[test]
    fn trace_rows_follow_stride() {
        let mut buf = Vec::new();
        let stats = run_with_trace(&params(), Mode::Original, 3, 1000, 100, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], TRACE_HEADER);
        assert_eq!(lines.len(), 11);
        assert!(lines[1].starts_with("0,0,0,0,0,"));
        assert!(lines[10].starts_with("900,"));
        assert_eq!(stats, run(&params(), Mode::Original, 3, 1000, 100));
    }

    #[test]
    fn checkpoints_follow_stride() {
        let stats = run(&params(), Mode::Original, 1, 1000, 250);
        let slots: Vec<_> = stats.queue_trace.iter().map(|s| s.slot).collect();
        assert_eq!(slots, [250, 500, 750, 1000]);
        assert!(stats.conservation_holds());
    }
}
