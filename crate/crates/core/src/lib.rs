//! Analytics and simulation for a source–relay–destination network in which
//! the source and the relay harvest energy, share a collision channel by
//! random access, and cooperate at the network level: the relay stores and
//! forwards source packets it overhears.
//!
//! * [`model`]: parameters and their validation.
//! * [`regions`]: closed-form inner and outer bounds on the stability region.
//! * [`sim`]: exact slot-level simulator and drift-based stability test.

pub mod model;
pub mod regions;
pub mod sim;

pub use model::{min_energy_rate, validate, RatePoint, RegionId, SystemParams, Violation};
pub use regions::{HalfPlane, RegionError, RelayLoad, ServiceRates};
pub use sim::{Mode, SimState, SimStats, SlotOutcome, StabilityVerdict, Verdict};
