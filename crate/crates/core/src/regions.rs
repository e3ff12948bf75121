//! Closed-form stability-region analytics.
//!
//! Shorthand used throughout:
//!
//! ```text
//! m_s = min(δ_S, q_S)          m_r = min(δ_R, q_R)
//! c   = p_SD + (1 − p_SD)·p_SR     (a solo source transmission leaves Q_S)
//! h   = (1 − p_SD)·p_SR            (... and is handed over to the relay)
//! b   = h / c                      (branch probability Pr(S_B | S_A))
//! ```
//!
//! Every region is the intersection of two open half-planes
//! `a·λ_S + b·λ_R < bound` with nonnegative coefficients, so all regions are
//! down-closed. Membership uses exact floating-point `<`; points on a
//! boundary are outside.

use thiserror::Error;

use crate::model::{min_energy_rate, RatePoint, RegionId, SystemParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegionError {
    #[error("degenerate channel: p_sd = 0 and p_sr = 0, no packet can ever leave the source")]
    DegenerateChannel,
    #[error("{what} out of domain: {detail}")]
    OutOfDomain { what: &'static str, detail: String },
}

pub type Result<T> = std::result::Result<T, RegionError>;

/// Arrival bookkeeping at the relay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelayLoad {
    /// `Pr(S_B | S_A)`: fraction of source departures handed to the relay.
    pub branch_prob: f64,
    /// `λ_{S→R}`: endogenous arrivals from the source.
    pub endogenous_rate: f64,
    /// `λ_{R,total} = λ_R + λ_{S→R}`.
    pub total_rate: f64,
}

/// A pair of service rates (packets/slot). Depending on the producer these
/// are average, saturated or dominant-system rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServiceRates {
    pub mu_s: f64,
    pub mu_r: f64,
}

/// The open half-plane `coeff_s·λ_S + coeff_r·λ_R < bound`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlane {
    pub coeff_s: f64,
    pub coeff_r: f64,
    pub bound: f64,
}

impl HalfPlane {
    pub const fn new(coeff_s: f64, coeff_r: f64, bound: f64) -> Self {
        Self {
            coeff_s,
            coeff_r,
            bound,
        }
    }

    pub fn lhs(&self, point: RatePoint) -> f64 {
        self.coeff_s * point.lambda_s + self.coeff_r * point.lambda_r
    }

    /// Strict membership.
    pub fn admits(&self, point: RatePoint) -> bool {
        self.lhs(point) < self.bound
    }

    /// Largest `λ_S` the half-plane admits on the `λ_R = 0` axis.
    fn intercept_s(&self) -> f64 {
        if self.coeff_s > 0.0 {
            self.bound / self.coeff_s
        } else {
            f64::INFINITY
        }
    }

    /// Largest `λ_R` the half-plane admits at `lambda_s`.
    fn ceiling_r(&self, lambda_s: f64) -> f64 {
        if self.coeff_r > 0.0 {
            (self.bound - self.coeff_s * lambda_s) / self.coeff_r
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Terms {
    m_s: f64,
    m_r: f64,
    c: f64,
    h: f64,
}

impl Terms {
    fn new(params: &SystemParams) -> Result<Self> {
        let h = (1.0 - params.p_sd) * params.p_sr;
        let c = params.p_sd + h;
        if c <= 0.0 {
            return Err(RegionError::DegenerateChannel);
        }
        Ok(Self {
            m_s: min_energy_rate(params.delta_s, params.q_s),
            m_r: min_energy_rate(params.delta_r, params.q_r),
            c,
            h,
        })
    }

    fn branch(&self) -> f64 {
        self.h / self.c
    }
}

pub fn relay_branch_prob(params: &SystemParams) -> Result<f64> {
    Terms::new(params).map(|t| t.branch())
}

pub fn relay_total_arrival(params: &SystemParams) -> Result<RelayLoad> {
    let branch_prob = relay_branch_prob(params)?;
    let endogenous_rate = branch_prob * params.lambda_s;
    Ok(RelayLoad {
        branch_prob,
        endogenous_rate,
        total_rate: params.lambda_r + endogenous_rate,
    })
}

/// `μ_S^s = m_s (1 − m_r) c`.
pub fn saturated_service_source(params: &SystemParams) -> f64 {
    let m_s = min_energy_rate(params.delta_s, params.q_s);
    let m_r = min_energy_rate(params.delta_r, params.q_r);
    let c = params.p_sd + (1.0 - params.p_sd) * params.p_sr;
    m_s * (1.0 - m_r) * c
}

/// `μ_R^s = m_r (1 − m_s) p_RD`.
pub fn saturated_service_relay(params: &SystemParams) -> f64 {
    let m_s = min_energy_rate(params.delta_s, params.q_s);
    let m_r = min_energy_rate(params.delta_r, params.q_r);
    m_r * (1.0 - m_s) * params.p_rd
}

pub fn saturated_service(params: &SystemParams) -> ServiceRates {
    ServiceRates {
        mu_s: saturated_service_source(params),
        mu_r: saturated_service_relay(params),
    }
}

fn fraction(what: &'static str, numerator: f64, denominator: f64) -> Result<f64> {
    if denominator <= 0.0 {
        return Err(RegionError::OutOfDomain {
            what,
            detail: format!("zero denominator (numerator {numerator})"),
        });
    }
    let value = numerator / denominator;
    if !(0.0..=1.0).contains(&value) {
        return Err(RegionError::OutOfDomain {
            what,
            detail: format!("{numerator} / {denominator} = {value} is not a probability"),
        });
    }
    Ok(value)
}

/// `Pr(B_R ≠ 0, Q_R ≠ 0)` when the source transmits dummy packets:
/// `λ_{R,total} / ([1 − m_s]·q_R·p_RD)`.
pub fn dom1_relay_active_fraction(params: &SystemParams, point: RatePoint) -> Result<f64> {
    let load = relay_total_arrival(&params.with_rates(point))?;
    let m_s = min_energy_rate(params.delta_s, params.q_s);
    fraction(
        "dom1 relay active fraction",
        load.total_rate,
        (1.0 - m_s) * params.q_r * params.p_rd,
    )
}

/// `Pr(B_S ≠ 0, Q_S ≠ 0)` when the relay transmits dummy packets:
/// `λ_S / (q_S·[1 − m_r]·c)`.
pub fn dom2_source_active_fraction(params: &SystemParams, point: RatePoint) -> Result<f64> {
    let m_r = min_energy_rate(params.delta_r, params.q_r);
    let c = params.p_sd + (1.0 - params.p_sd) * params.p_sr;
    fraction(
        "dom2 source active fraction",
        point.lambda_s,
        params.q_s * (1.0 - m_r) * c,
    )
}

/// The two constraints defining `region`. Each has a unit coefficient on
/// the queue it bounds or a right-hand side equal to that node's service.
///
/// If a normalizing denominator vanishes (`m_s = 1` for R1, `m_r = 1` for
/// R2) the inequality is returned multiplied through by it instead, which
/// keeps every coefficient finite. The region is empty in both cases.
pub fn region_halfplanes(params: &SystemParams, region: RegionId) -> Result<[HalfPlane; 2]> {
    let t = Terms::new(params)?;
    let relay_bound_dom1 = t.m_r * (1.0 - t.m_s) * params.p_rd;
    let source_bound_dom2 = t.m_s * (1.0 - t.m_r) * t.c;
    let relay_load = HalfPlane::new(t.branch(), 1.0, relay_bound_dom1);

    match region {
        RegionId::Inner => Ok([HalfPlane::new(1.0, 0.0, source_bound_dom2), relay_load]),
        RegionId::R1 => {
            let d = (1.0 - t.m_s) * params.p_rd;
            let source = if d > 0.0 {
                HalfPlane::new(1.0 + t.m_s * t.h / d, t.m_s * t.c / d, t.m_s * t.c)
            } else {
                HalfPlane::new(d + t.m_s * t.h, t.m_s * t.c, t.m_s * t.c * d)
            };
            Ok([source, relay_load])
        }
        RegionId::R2 => {
            let d = (1.0 - t.m_r) * t.c;
            let numer = (1.0 - t.m_r) * t.h + t.m_r * params.p_rd;
            let relay = if d > 0.0 {
                HalfPlane::new(numer / d, 1.0, t.m_r * params.p_rd)
            } else {
                HalfPlane::new(numer, d, t.m_r * params.p_rd * d)
            };
            Ok([relay, HalfPlane::new(1.0, 0.0, source_bound_dom2)])
        }
        RegionId::Outer => Err(RegionError::OutOfDomain {
            what: "region",
            detail: "outer is a union and has no half-plane description".into(),
        }),
    }
}

pub fn region_contains(params: &SystemParams, region: RegionId, point: RatePoint) -> Result<bool> {
    match region {
        RegionId::Outer => Ok(region_contains(params, RegionId::R1, point)?
            || region_contains(params, RegionId::R2, point)?),
        _ => Ok(region_halfplanes(params, region)?
            .iter()
            .all(|hp| hp.admits(point))),
    }
}

fn is_empty(planes: &[HalfPlane; 2]) -> bool {
    planes.iter().any(|hp| hp.bound <= 0.0)
}

fn planes_intercept_s(planes: &[HalfPlane; 2]) -> f64 {
    let x = planes
        .iter()
        .map(HalfPlane::intercept_s)
        .fold(f64::INFINITY, f64::min);
    // Arrival rates are Bernoulli, so nothing beyond one packet per slot.
    x.min(1.0)
}

fn planes_ceiling_r(planes: &[HalfPlane; 2], lambda_s: f64) -> f64 {
    let y = planes
        .iter()
        .map(|hp| hp.ceiling_r(lambda_s))
        .fold(f64::INFINITY, f64::min);
    y.clamp(0.0, 1.0)
}

/// Samples the upper-right boundary of `region` at `resolution` evenly
/// spaced `λ_S` values from 0 to the region's `λ_S`-intercept.
///
/// Returned points are non-members: rounding is corrected by stepping the
/// free coordinate outward by a few ulps. A region with empty interior
/// yields two copies of the origin.
pub fn trace_boundary(
    params: &SystemParams,
    region: RegionId,
    resolution: usize,
) -> Result<Vec<RatePoint>> {
    if resolution < 2 {
        return Err(RegionError::OutOfDomain {
            what: "resolution",
            detail: format!("{resolution} < 2"),
        });
    }

    let parts: Vec<[HalfPlane; 2]> = match region {
        RegionId::Outer => vec![
            region_halfplanes(params, RegionId::R1)?,
            region_halfplanes(params, RegionId::R2)?,
        ],
        r => vec![region_halfplanes(params, r)?],
    }
    .into_iter()
    .filter(|planes| !is_empty(planes))
    .collect();

    if parts.is_empty() {
        return Ok(vec![RatePoint::ORIGIN; 2]);
    }

    let extent = parts.iter().map(planes_intercept_s).fold(0.0, f64::max);
    let last = resolution - 1;
    let mut points = Vec::with_capacity(resolution);
    for k in 0..resolution {
        let lambda_s = if k == last {
            extent
        } else {
            extent * k as f64 / last as f64
        };
        let lambda_r = parts
            .iter()
            .filter(|planes| lambda_s <= planes_intercept_s(planes))
            .map(|planes| planes_ceiling_r(planes, lambda_s))
            .fold(0.0, f64::max);
        let point = RatePoint::new(lambda_s, lambda_r);
        points.push(snap_outside(params, region, point, k == last)?);
    }
    Ok(points)
}

/// Steps `point` outward by ulps until it is no longer a member of `region`.
fn snap_outside(
    params: &SystemParams,
    region: RegionId,
    mut point: RatePoint,
    along_s: bool,
) -> Result<RatePoint> {
    for _ in 0..256 {
        if !region_contains(params, region, point)? {
            break;
        }
        if along_s || point.lambda_r <= 0.0 {
            point.lambda_s = point.lambda_s.next_up();
        } else {
            point.lambda_r = point.lambda_r.next_up();
        }
    }
    Ok(point)
}

/// Which queue(s) a rate point overloads in the fluid limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bottleneck {
    None,
    Source,
    Relay,
    Both,
}

/// Predicted growth of the backlog at a rate point outside the outer bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverloadDrift {
    pub bottleneck: Bottleneck,
    /// Growth rate of `Q_S` (packets/slot), 0 when the source keeps up.
    pub source: f64,
    /// Growth rate of `Q_R` (packets/slot), 0 when the relay keeps up.
    pub relay: f64,
}

impl OverloadDrift {
    /// Growth rate of `Q_S + Q_R`.
    pub fn total(&self) -> f64 {
        self.source + self.relay
    }
}

/// Fluid-limit drift of both queues at `point`.
///
/// An overloaded queue never empties, so its node behaves as in the dominant
/// system where it always has a packet: it attempts in a fraction `m` of
/// slots. The other node, if it keeps up, attempts just often enough to
/// carry its load. Three cases cover every point outside `R1 ∪ R2`:
///
/// * `λ_S < μ_S^s`: the source keeps up even against a saturated relay;
///   the relay drifts at `λ_R + bλ_S − m_r p_RD (1 − λ_S / [(1 − m_r)c])`,
///   the left minus right side of the first R2 inequality.
/// * both saturated: the relay receives `λ_R + b·μ_S^s ≥ μ_R^s`; the source
///   drifts at `λ_S − μ_S^s`, the relay at `λ_R + b·μ_S^s − μ_R^s`.
/// * otherwise the source alone is saturated; its service `x*` solves
///   `x = m_s c (1 − (λ_R + b x) / [(1 − m_s) p_RD])`, so the relay's
///   handover load is computed from the source's actual throughput
///   rather than from `λ_S`.
pub fn overload_drift(params: &SystemParams, point: RatePoint) -> Result<OverloadDrift> {
    let t = Terms::new(params)?;
    let b = t.branch();
    let mu_s_sat = t.m_s * (1.0 - t.m_r) * t.c;
    let mu_r_sat = t.m_r * (1.0 - t.m_s) * params.p_rd;
    let (ls, lr) = (point.lambda_s, point.lambda_r);

    let drift = if ls < mu_s_sat {
        let source_tx = ls / ((1.0 - t.m_r) * t.c);
        let relay_service = t.m_r * (1.0 - source_tx) * params.p_rd;
        let excess = lr + b * ls - relay_service;
        if excess > 0.0 {
            OverloadDrift {
                bottleneck: Bottleneck::Relay,
                source: 0.0,
                relay: excess,
            }
        } else {
            OverloadDrift {
                bottleneck: Bottleneck::None,
                source: 0.0,
                relay: 0.0,
            }
        }
    } else if lr + b * mu_s_sat >= mu_r_sat {
        OverloadDrift {
            bottleneck: Bottleneck::Both,
            source: ls - mu_s_sat,
            relay: lr + b * mu_s_sat - mu_r_sat,
        }
    } else {
        // mu_r_sat > 0 here, so m_s < 1 and d > 0.
        let d = (1.0 - t.m_s) * params.p_rd;
        let service = t.m_s * t.c * (1.0 - lr / d) / (1.0 + t.m_s * t.h / d);
        if ls > service {
            OverloadDrift {
                bottleneck: Bottleneck::Source,
                source: ls - service,
                relay: 0.0,
            }
        } else {
            OverloadDrift {
                bottleneck: Bottleneck::None,
                source: 0.0,
                relay: 0.0,
            }
        }
    };
    Ok(drift)
}
