//! Network parameterization shared by the analytics and the simulator.

use std::fmt;

/// The nine probabilities that fully describe the S–R–D network.
///
/// Arrivals and harvests are Bernoulli per slot, so every field is a
/// probability in `[0, 1]`. The relay is assumed to have the better channel
/// to the destination (`p_rd > p_sd`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Exogenous packet arrival rate at the source.
    pub lambda_s: f64,
    /// Exogenous packet arrival rate at the relay.
    pub lambda_r: f64,
    /// Energy harvesting rate at the source.
    pub delta_s: f64,
    /// Energy harvesting rate at the relay.
    pub delta_r: f64,
    /// Source transmit probability when it may transmit.
    pub q_s: f64,
    /// Relay transmit probability when it may transmit.
    pub q_r: f64,
    /// Decoding probability on the S→D link.
    pub p_sd: f64,
    /// Decoding probability on the R→D link.
    pub p_rd: f64,
    /// Decoding probability on the S→R link.
    pub p_sr: f64,
}

impl SystemParams {
    /// Returns a copy with the arrival rates replaced by `point`.
    pub fn with_rates(&self, point: RatePoint) -> Self {
        Self {
            lambda_s: point.lambda_s,
            lambda_r: point.lambda_r,
            ..*self
        }
    }

    pub fn rates(&self) -> RatePoint {
        RatePoint::new(self.lambda_s, self.lambda_r)
    }

    /// Field values in declaration order, paired with their names.
    pub fn fields(&self) -> [(&'static str, f64); 9] {
        [
            ("lambda_s", self.lambda_s),
            ("lambda_r", self.lambda_r),
            ("delta_s", self.delta_s),
            ("delta_r", self.delta_r),
            ("q_s", self.q_s),
            ("q_r", self.q_r),
            ("p_sd", self.p_sd),
            ("p_rd", self.p_rd),
            ("p_sr", self.p_sr),
        ]
    }

    pub fn validate(&self) -> Result<(), Vec<Violation>> {
        validate(self)
    }
}

/// An arrival-rate pair `(λ_S, λ_R)` in packets per slot.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RatePoint {
    pub lambda_s: f64,
    pub lambda_r: f64,
}

impl RatePoint {
    pub const ORIGIN: RatePoint = RatePoint {
        lambda_s: 0.0,
        lambda_r: 0.0,
    };

    pub const fn new(lambda_s: f64, lambda_r: f64) -> Self {
        Self { lambda_s, lambda_r }
    }

    pub fn scale(self, factor: f64) -> Self {
        Self::new(self.lambda_s * factor, self.lambda_r * factor)
    }

    pub fn is_valid(&self) -> bool {
        self.lambda_s >= 0.0 && self.lambda_r >= 0.0
    }
}

/// Identifies one of the analytic regions.
///
/// `Outer` is the union of `R1` and `R2` and is always evaluated as such.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegionId {
    Inner,
    R1,
    R2,
    Outer,
}

impl RegionId {
    pub const ALL: [RegionId; 4] = [RegionId::Inner, RegionId::R1, RegionId::R2, RegionId::Outer];

    pub fn name(self) -> &'static str {
        match self {
            RegionId::Inner => "inner",
            RegionId::R1 => "r1",
            RegionId::R2 => "r2",
            RegionId::Outer => "outer",
        }
    }
}

impl fmt::Display for RegionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    OutOfUnitInterval,
    RelayNotBetter,
}

/// A single failed constraint on [`SystemParams`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: &'static str,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ViolationKind::OutOfUnitInterval => write!(f, "{} out of [0,1]", self.field),
            ViolationKind::RelayNotBetter => f.write_str("p_rd must exceed p_sd"),
        }
    }
}

/// Checks every parameter constraint and reports all failures at once.
///
/// NaN fails the range check. The relay-advantage check is skipped when
/// either channel probability is already out of range.
pub fn validate(params: &SystemParams) -> Result<(), Vec<Violation>> {
    let mut violations: Vec<Violation> = params
        .fields()
        .iter()
        .filter(|(_, v)| !(0.0..=1.0).contains(v))
        .map(|&(field, _)| Violation {
            field,
            kind: ViolationKind::OutOfUnitInterval,
        })
        .collect();

    let channels_in_range = [params.p_sd, params.p_rd]
        .iter()
        .all(|v| (0.0..=1.0).contains(v));
    if channels_in_range && params.p_rd <= params.p_sd {
        violations.push(Violation {
            field: "p_rd",
            kind: ViolationKind::RelayNotBetter,
        });
    }

    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// `min(δ, q)`: the long-run fraction of slots in which a saturated node
/// transmits, i.e. `q · Pr(B ≠ 0)` with `Pr(B ≠ 0) = min(δ/q, 1)`.
pub fn min_energy_rate(delta: f64, q: f64) -> f64 {
    delta.min(q)
}
