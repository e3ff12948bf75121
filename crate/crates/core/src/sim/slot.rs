//! One slot of the S–R–D random-access protocol.

use crate::model::SystemParams;

/// Packet and energy backlog at the start of a slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SimState {
    /// Packets queued at the source.
    pub q_s: u64,
    /// Packets queued at the relay (exogenous and handed-over, merged FIFO).
    pub q_r: u64,
    /// Energy units stored at the source.
    pub b_s: u64,
    /// Energy units stored at the relay.
    pub b_r: u64,
    pub slot: u64,
}

impl SimState {
    pub fn total_queue(&self) -> u64 {
        self.q_s + self.q_r
    }
}

/// Which queues the simulator pretends are backlogged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Mode {
    /// The protocol as specified: nodes transmit only real packets.
    #[default]
    Original,
    /// The source sends a dummy packet whenever its queue is empty.
    DomSource,
    /// The relay sends a dummy packet whenever its queue is empty.
    DomRelay,
    /// An empty queue is refilled with one packet at the start of each slot.
    Saturated,
}

impl Mode {
    pub const ALL: [Mode; 4] = [
        Mode::Original,
        Mode::DomSource,
        Mode::DomRelay,
        Mode::Saturated,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Original => "original",
            Mode::DomSource => "dom_source",
            Mode::DomRelay => "dom_relay",
            Mode::Saturated => "saturated",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                format!(
                    "unknown mode '{s}' (expected original, dom_source, dom_relay or saturated)"
                )
            })
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Everything that happened during one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SlotOutcome {
    pub s_transmitted: bool,
    pub r_transmitted: bool,
    pub s_dummy: bool,
    pub r_dummy: bool,
    pub collision: bool,
    /// Source packet decoded by the destination.
    pub s_to_d: bool,
    /// Source packet missed by the destination but stored by the relay.
    pub s_to_r: bool,
    /// Relay packet decoded by the destination.
    pub r_to_d: bool,
    pub s_pkt_arrival: bool,
    pub r_pkt_arrival: bool,
    pub s_harvest: bool,
    pub r_harvest: bool,
    /// A packet was injected into the empty source queue (saturated mode).
    pub s_injected: bool,
    /// A packet was injected into the empty relay queue (saturated mode).
    pub r_injected: bool,
}

/// Number of uniforms consumed per slot.
pub const DRAWS_PER_SLOT: usize = 9;

/// The uniforms driving one slot, in consumption order:
///
/// | index | event                      | occurs iff        |
/// |-------|----------------------------|-------------------|
/// | 0     | source access coin         | `u < q_S`         |
/// | 1     | relay access coin          | `u < q_R`         |
/// | 2     | S→D decoding               | `u < p_SD`        |
/// | 3     | S→R decoding               | `u < p_SR`        |
/// | 4     | R→D decoding               | `u < p_RD`        |
/// | 5     | source packet arrival      | `u < λ_S`         |
/// | 6     | source energy harvest      | `u < δ_S`         |
/// | 7     | relay packet arrival       | `u < λ_R`         |
/// | 8     | relay energy harvest       | `u < δ_R`         |
///
/// All nine are drawn every slot whether or not the event is reachable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotDraws(pub [f64; DRAWS_PER_SLOT]);

impl SlotDraws {
    fn s_access(&self) -> f64 {
        self.0[0]
    }
    fn r_access(&self) -> f64 {
        self.0[1]
    }
    fn sd(&self) -> f64 {
        self.0[2]
    }
    fn sr(&self) -> f64 {
        self.0[3]
    }
    fn rd(&self) -> f64 {
        self.0[4]
    }
    fn s_packet(&self) -> f64 {
        self.0[5]
    }
    fn s_energy(&self) -> f64 {
        self.0[6]
    }
    fn r_packet(&self) -> f64 {
        self.0[7]
    }
    fn r_energy(&self) -> f64 {
        self.0[8]
    }
}

/// Advances the network by one slot.
///
/// Order within the slot: saturation refill, eligibility from the
/// slot-start state, access coins (each transmission spends one energy
/// unit), channel resolution, then exogenous arrivals and harvests, which
/// become usable in the next slot. The relay overhears the source whenever
/// it is not itself transmitting; reception is free.
pub fn step(
    state: &SimState,
    params: &SystemParams,
    mode: Mode,
    draws: &SlotDraws,
) -> (SimState, SlotOutcome) {
    let mut next = *state;
    let mut out = SlotOutcome::default();

    if mode == Mode::Saturated {
        if next.q_s == 0 {
            next.q_s = 1;
            out.s_injected = true;
        }
        if next.q_r == 0 {
            next.q_r = 1;
            out.r_injected = true;
        }
    }

    let s_real = next.q_s > 0;
    let r_real = next.q_r > 0;
    let s_eligible = next.b_s > 0 && (s_real || mode == Mode::DomSource);
    let r_eligible = next.b_r > 0 && (r_real || mode == Mode::DomRelay);

    out.s_transmitted = s_eligible && draws.s_access() < params.q_s;
    out.r_transmitted = r_eligible && draws.r_access() < params.q_r;
    out.s_dummy = out.s_transmitted && !s_real;
    out.r_dummy = out.r_transmitted && !r_real;
    if out.s_transmitted {
        next.b_s -= 1;
    }
    if out.r_transmitted {
        next.b_r -= 1;
    }

    match (out.s_transmitted, out.r_transmitted) {
        (true, true) => out.collision = true,
        (true, false) if !out.s_dummy => {
            if draws.sd() < params.p_sd {
                next.q_s -= 1;
                out.s_to_d = true;
            } else if draws.sr() < params.p_sr {
                next.q_s -= 1;
                next.q_r += 1;
                out.s_to_r = true;
            }
        }
        (false, true) if !out.r_dummy && draws.rd() < params.p_rd => {
            next.q_r -= 1;
            out.r_to_d = true;
        }
        _ => {}
    }

    out.s_pkt_arrival = draws.s_packet() < params.lambda_s;
    out.s_harvest = draws.s_energy() < params.delta_s;
    out.r_pkt_arrival = draws.r_packet() < params.lambda_r;
    out.r_harvest = draws.r_energy() < params.delta_r;
    next.q_s += u64::from(out.s_pkt_arrival);
    next.b_s += u64::from(out.s_harvest);
    next.q_r += u64::from(out.r_pkt_arrival);
    next.b_r += u64::from(out.r_harvest);

    next.slot += 1;
    (next, out)
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

    /// Builds draws where `yes` events fire and everything else does not.
    /// Indices not listed are set to 0.999 (fails every test with p < 1).
    fn draws(yes: &[usize]) -> SlotDraws {
        let mut u = [0.999; DRAWS_PER_SLOT];
        for &i in yes {
            u[i] = 0.0;
        }
        SlotDraws(u)
    }

    fn state(q_s: u64, b_s: u64, q_r: u64, b_r: u64) -> SimState {
        SimState {
            q_s,
            q_r,
            b_s,
            b_r,
            slot: 0,
        }
    }

    #[test]
    fn collision_spends_energy_and_moves_nothing() {
        let (next, out) = step(
            &state(2, 1, 1, 1),
            &params(),
            Mode::Original,
            &draws(&[0, 1, 2, 4]),
        );
        assert!(out.collision && out.s_transmitted && out.r_transmitted);
        assert!(!out.s_to_d && !out.s_to_r && !out.r_to_d);
        assert_eq!((next.q_s, next.q_r, next.b_s, next.b_r), (2, 1, 0, 0));
        assert_eq!(next.slot, 1);
    }

    #[test]
    fn direct_delivery() {
        let (next, out) = step(
            &state(1, 1, 0, 5),
            &params(),
            Mode::Original,
            &draws(&[0, 2]),
        );
        assert!(out.s_to_d && !out.s_to_r);
        assert_eq!((next.q_s, next.b_s, next.q_r, next.b_r), (0, 0, 0, 5));
    }

    #[test]
    fn relay_handover() {
        let (next, out) = step(
            &state(1, 1, 0, 5),
            &params(),
            Mode::Original,
            &draws(&[0, 3]),
        );
        assert!(out.s_to_r && !out.s_to_d);
        assert_eq!((next.q_s, next.b_s, next.q_r), (0, 0, 1));
    }

    #[test]
    fn handover_happens_even_with_empty_relay_battery() {
        let (next, out) = step(
            &state(1, 1, 3, 0),
            &params(),
            Mode::Original,
            &draws(&[0, 1, 3]),
        );
        assert!(!out.r_transmitted && out.s_to_r);
        assert_eq!(next.q_r, 4);
    }

    #[test]
    fn failed_transmission_keeps_packet() {
        let (next, out) = step(&state(1, 2, 0, 0), &params(), Mode::Original, &draws(&[0]));
        assert!(out.s_transmitted && !out.s_to_d && !out.s_to_r);
        assert_eq!((next.q_s, next.b_s), (1, 1));
    }

    #[test]
    fn no_energy_no_transmission() {
        let (next, out) = step(
            &state(3, 0, 0, 0),
            &params(),
            Mode::Original,
            &draws(&[0, 1, 2]),
        );
        assert!(!out.s_transmitted);
        assert_eq!(next.q_s, 3);
    }

    #[test]
    fn relay_solo_delivery() {
        let (next, out) = step(
            &state(0, 4, 2, 1),
            &params(),
            Mode::Original,
            &draws(&[0, 1, 4]),
        );
        assert!(!out.s_transmitted && out.r_to_d);
        assert_eq!((next.q_r, next.b_r, next.b_s), (1, 0, 4));
    }

    #[test]
    fn arrivals_are_usable_next_slot() {
        let p = params();
        let (next, out) = step(
            &state(0, 0, 0, 0),
            &p,
            Mode::Original,
            &draws(&[0, 1, 5, 6, 7, 8]),
        );
        assert!(!out.s_transmitted && !out.r_transmitted);
        assert_eq!((next.q_s, next.b_s, next.q_r, next.b_r), (1, 1, 1, 1));
    }

    #[test]
    fn dummy_packets() {
        let p = params();
        let (next, out) = step(&state(0, 1, 0, 1), &p, Mode::DomSource, &draws(&[0, 2, 3]));
        assert!(out.s_transmitted && out.s_dummy && !out.s_to_d && !out.s_to_r);
        assert_eq!((next.q_s, next.b_s, next.q_r), (0, 0, 0));

        let (next, out) = step(&state(0, 1, 0, 1), &p, Mode::DomRelay, &draws(&[1, 4]));
        assert!(out.r_transmitted && out.r_dummy && !out.r_to_d);
        assert_eq!(next.b_r, 0);

        // A dummy still collides with a real packet.
        let (next, out) = step(&state(1, 1, 0, 1), &p, Mode::DomRelay, &draws(&[0, 1, 2]));
        assert!(out.collision && out.r_dummy && !out.s_dummy);
        assert_eq!(next.q_s, 1);
    }

    #[test]
    fn saturated_mode_refills_empty_queues() {
        let (next, out) = step(
            &state(0, 1, 0, 0),
            &params(),
            Mode::Saturated,
            &draws(&[0, 2]),
        );
        assert!(out.s_injected && out.r_injected && out.s_to_d);
        assert_eq!((next.q_s, next.q_r), (0, 1));
    }

    #[test]
    fn mode_names_round_trip() {
        for m in Mode::ALL {
            assert_eq!(m.name().parse::<Mode>().unwrap(), m);
        }
        assert!("dominant".parse::<Mode>().is_err());
    }
}
