//! Slotted-time Monte Carlo engine for the two-hop relay network.

mod classify;
mod run;
mod slot;

pub use classify::{
    classify_run, classify_stability, classify_stats, ClassifierConfig, ClassifierError,
    StabilityVerdict, Verdict,
};
pub use run::{
    empirical_rates, run, run_with_trace, EmpiricalRates, QueueSample, SimStats, Simulation,
    SlotRng, TRACE_HEADER,
};
pub use slot::{step, Mode, SimState, SlotDraws, SlotOutcome, DRAWS_PER_SLOT};
