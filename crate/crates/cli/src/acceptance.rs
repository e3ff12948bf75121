//! The acceptance suite: simulation oracles, stability bounds, region
//! geometry, conservation and determinism.

use std::io::Write;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use ehrelay::regions::{
    overload_drift, region_contains, relay_branch_prob, saturated_service, saturated_service_relay,
    trace_boundary,
};
use ehrelay::sim::{classify_run, empirical_rates, run, Mode, SimStats, SlotRng, Verdict};
use ehrelay::{RatePoint, RegionId, SystemParams};

use crate::config::{ExperimentConfig, GridSpec};
use crate::error::HarnessError;
use crate::sweep::{par_map, point_seed, sweep_csv_bytes, sweep_rows, SweepRow};

const RESOLUTION: usize = 200;

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub id: u8,
    pub name: &'static str,
    pub measured: f64,
    pub target: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl CheckResult {
    pub fn line(&self) -> String {
        format!(
            "[{}] C{} {}: measured {:.6}, target {:.6} ± {} ({:.2} s) {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.measured,
            self.target,
            self.tolerance,
            self.elapsed.as_secs_f64(),
            self.detail
        )
    }
}

/// Conservation outcomes of every simulation run by the suite.
#[derive(Debug, Default)]
pub struct RunLedger {
    inner: Mutex<(u64, Vec<String>)>,
}

impl RunLedger {
    pub fn record(&self, label: &str, conserved: bool) {
        let mut g = self.inner.lock().unwrap_or_else(|e| e.into_inner());
        g.0 += 1;
        if !conserved {
            g.1.push(label.to_string());
        }
    }

    pub fn record_stats(&self, label: &str, stats: &SimStats) {
        self.record(label, stats.conservation_holds());
    }

    fn record_rows(&self, label: &str, rows: &[SweepRow]) {
        for r in rows {
            self.record(
                &format!("{label} ({:.4},{:.4})", r.lambda_s, r.lambda_r),
                r.conserved,
            );
        }
    }

    /// Total runs and the labels of runs that broke conservation.
    pub fn snapshot(&self) -> (u64, Vec<String>) {
        self.inner.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }
}

#[derive(Debug)]
pub struct AcceptanceReport {
    pub results: Vec<CheckResult>,
}

impl AcceptanceReport {
    pub fn all_passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }
}

/// Largest `λ_S` and `λ_R` on the boundary of `region`.
pub fn region_extent(params: &SystemParams, region: RegionId) -> Result<(f64, f64), HarnessError> {
    let pts = trace_boundary(params, region, RESOLUTION)?;
    Ok(pts.iter().fold((0.0f64, 0.0f64), |(x, y), p| {
        (x.max(p.lambda_s), y.max(p.lambda_r))
    }))
}

/// The configured grid, or one spanning 1.2× the outer bound in 8 steps.
pub fn grid_or_default(config: &ExperimentConfig) -> Result<GridSpec, HarnessError> {
    if let Some(g) = config.grid {
        return Ok(g);
    }
    let (xs, yr) = region_extent(&config.params, RegionId::Outer)?;
    let axis = |v: f64| if v > 0.0 { (1.2 * v).min(1.0) } else { 1.0 };
    Ok(GridSpec {
        lambda_s_max: axis(xs),
        lambda_r_max: axis(yr),
        steps: 8,
    })
}

fn timed<F>(id: u8, name: &'static str, f: F) -> Result<CheckResult, HarnessError>
where
    F: FnOnce() -> Result<(f64, f64, f64, bool, String), HarnessError>,
{
    let start = Instant::now();
    let (measured, target, tolerance, passed, detail) = f()?;
    Ok(CheckResult {
        id,
        name,
        measured,
        target,
        tolerance,
        passed,
        detail,
        elapsed: start.elapsed(),
    })
}

pub fn check_battery_occupancy(
    config: &ExperimentConfig,
    ledger: &RunLedger,
) -> Result<CheckResult, HarnessError> {
    let params = SystemParams {
        delta_s: 0.3,
        q_s: 0.6,
        ..config.params
    };
    let start = Instant::now();
    let stats = run(
        &params,
        Mode::Saturated,
        point_seed(config.base_seed, 1, 0),
        config.sim.n_slots,
        config.sim.stride,
    );
    let secs = start.elapsed().as_secs_f64();
    ledger.record_stats("battery occupancy", &stats);
    let target = params.delta_s / params.q_s;
    let measured = empirical_rates(&stats).s_battery_fraction;
    let ok = (measured - target).abs() <= 0.005 && secs < 2.0;
    Ok(CheckResult {
        id: 1,
        name: "battery occupancy",
        measured,
        target,
        tolerance: 0.005,
        passed: ok,
        detail: format!("{} slots in {secs:.3} s (limit 2 s)", config.sim.n_slots),
        elapsed: start.elapsed(),
    })
}

pub fn check_saturated_throughput(
    config: &ExperimentConfig,
    ledger: &RunLedger,
) -> Result<CheckResult, HarnessError> {
    timed(2, "saturated throughput", || {
        let stats = run(
            &config.params,
            Mode::Saturated,
            point_seed(config.base_seed, 2, 0),
            config.sim.n_slots,
            config.sim.stride,
        );
        ledger.record_stats("saturated throughput", &stats);
        let want = saturated_service(&config.params);
        let got = empirical_rates(&stats);
        let err_s = (got.mu_s - want.mu_s).abs();
        let err_r = (got.mu_r - want.mu_r).abs();
        let worst = if err_s >= err_r {
            (got.mu_s, want.mu_s)
        } else {
            (got.mu_r, want.mu_r)
        };
        Ok((
            worst.0,
            worst.1,
            0.01,
            err_s <= 0.01 && err_r <= 0.01,
            format!(
                "mu_s {:.6} vs {:.6}, mu_r {:.6} vs {:.6}",
                got.mu_s, want.mu_s, got.mu_r, want.mu_r
            ),
        ))
    })
}

/// The relay's service per busy slot in the source-dominant system.
///
/// The relay battery is raised to `δ_R ≥ q_R` first. With `δ_R < q_R` and
/// the relay queue stable, the battery drifts upward during idle slots, so
/// a busy relay transmits with probability `q_R` rather than `δ_R`.
pub fn check_dominant_relay_rate(
    config: &ExperimentConfig,
    ledger: &RunLedger,
) -> Result<CheckResult, HarnessError> {
    timed(3, "dominant-system relay rate", || {
        let params = SystemParams {
            delta_r: config.params.delta_r.max(config.params.q_r),
            ..config.params
        };
        let sat = saturated_service(&params);
        let b = relay_branch_prob(&params)?;
        let ls = 0.25 * sat.mu_s;
        let lr = (0.5 * sat.mu_r - b * ls).max(0.0);
        let stats = run(
            &params.with_rates(RatePoint::new(ls, lr)),
            Mode::DomSource,
            point_seed(config.base_seed, 3, 0),
            config.sim.n_slots,
            config.sim.stride,
        );
        ledger.record_stats("dominant relay rate", &stats);
        let measured = empirical_rates(&stats).r_busy_service;
        let target = saturated_service_relay(&params);
        Ok((
            measured,
            target,
            0.01,
            (measured - target).abs() <= 0.01,
            format!(
                "dom_source at ({ls:.4},{lr:.4}), delta_r {:.3}, {} busy slots",
                params.delta_r, stats.r_busy_slots
            ),
        ))
    })
}

fn sample_points<F>(
    seed: u64,
    n: usize,
    box_s: f64,
    box_r: f64,
    mut accept: F,
) -> Result<Vec<RatePoint>, HarnessError>
where
    F: FnMut(RatePoint) -> Result<bool, HarnessError>,
{
    let mut rng = SlotRng::new(seed);
    let mut out = Vec::with_capacity(n);
    for _ in 0..1_000_000 {
        if out.len() == n {
            break;
        }
        let p = RatePoint::new(rng.uniform() * box_s, rng.uniform() * box_r);
        if accept(p)? {
            out.push(p);
        }
    }
    Ok(out)
}

pub fn check_inner_sufficiency(
    config: &ExperimentConfig,
    jobs: usize,
    ledger: &RunLedger,
) -> Result<CheckResult, HarnessError> {
    timed(4, "inner bound sufficiency", || {
        let params = &config.params;
        let sat = saturated_service(params);
        let points = sample_points(
            point_seed(config.base_seed, 4, 0),
            50,
            sat.mu_s,
            sat.mu_r,
            |p| Ok(region_contains(params, RegionId::Inner, p.scale(1.05))?),
        )?;
        let seeds: Vec<(usize, RatePoint)> = points.into_iter().enumerate().collect();
        let verdicts = par_map(&seeds, jobs, |&(i, p)| {
            let (v, stats) = classify_run(
                &params.with_rates(p),
                Mode::Original,
                point_seed(config.base_seed, 4, i + 1),
                &config.sim,
            )?;
            Ok((v.verdict, stats.conservation_holds()))
        })?;
        let n = verdicts.len();
        let stable = verdicts.iter().filter(|v| v.0 == Verdict::Stable).count();
        let unstable = verdicts.iter().filter(|v| v.0 == Verdict::Unstable).count();
        for (i, v) in verdicts.iter().enumerate() {
            ledger.record(&format!("inner point {i}"), v.1);
        }
        let frac = if n > 0 { stable as f64 / n as f64 } else { 0.0 };
        Ok((
            frac,
            1.0,
            0.05,
            n == 50 && frac >= 0.95 && unstable == 0,
            format!("{stable}/{n} stable, {unstable} unstable"),
        ))
    })
}

pub fn check_outer_necessity(
    config: &ExperimentConfig,
    jobs: usize,
    ledger: &RunLedger,
) -> Result<CheckResult, HarnessError> {
    timed(5, "outer bound necessity", || {
        let params = &config.params;
        let (xs, yr) = region_extent(params, RegionId::Outer)?;
        let points = sample_points(
            point_seed(config.base_seed, 5, 0),
            50,
            (2.0 * xs).clamp(0.05, 1.0),
            (2.0 * yr).clamp(0.05, 1.0),
            |p| {
                Ok(!region_contains(
                    params,
                    RegionId::Outer,
                    p.scale(1.0 / 1.05),
                )?)
            },
        )?;
        let seeds: Vec<(usize, RatePoint)> = points.into_iter().enumerate().collect();
        let rows = par_map(&seeds, jobs, |&(i, p)| {
            let (v, stats) = classify_run(
                &params.with_rates(p),
                Mode::Original,
                point_seed(config.base_seed, 5, i + 1),
                &config.sim,
            )?;
            let predicted = overload_drift(params, p)?.total();
            Ok((
                v.verdict,
                v.drift_slope,
                predicted,
                stats.conservation_holds(),
            ))
        })?;
        let n = rows.len();
        let unstable = rows.iter().filter(|r| r.0 == Verdict::Unstable).count();
        let mut worst = 0.0f64;
        for (i, r) in rows.iter().enumerate() {
            ledger.record(&format!("outer point {i}"), r.3);
            let rel = if r.2 > 0.0 {
                (r.1 - r.2).abs() / r.2
            } else {
                f64::INFINITY
            };
            worst = worst.max(rel);
        }
        Ok((
            worst,
            0.0,
            0.2,
            n == 50 && unstable == n && worst <= 0.2,
            format!("{unstable}/{n} unstable, worst relative drift error {worst:.4}"),
        ))
    })
}

fn random_params(rng: &mut SlotRng) -> SystemParams {
    let p_sd = rng.uniform();
    SystemParams {
        lambda_s: 0.0,
        lambda_r: 0.0,
        delta_s: rng.uniform(),
        delta_r: rng.uniform(),
        q_s: rng.uniform(),
        q_r: rng.uniform(),
        p_sd,
        p_rd: 1.0 - rng.uniform() * (1.0 - p_sd),
        p_sr: rng.uniform(),
    }
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct GeometryViolations {
    pub down_closed: u64,
    pub inner_in_outer: u64,
    pub outer_union: u64,
}

impl GeometryViolations {
    pub fn total(&self) -> u64 {
        self.down_closed + self.inner_in_outer + self.outer_union
    }
}

/// Checks the three membership properties on an `n × n` grid spanning 1.25×
/// the outer bound.
pub fn geometry_violations(
    params: &SystemParams,
    n: usize,
) -> Result<GeometryViolations, HarnessError> {
    let (xs, yr) = region_extent(params, RegionId::Outer)?;
    let axis = |v: f64| if v > 0.0 { (1.25 * v).min(1.0) } else { 1.0 };
    let (sx, sy) = (axis(xs), axis(yr));
    let point =
        |i: usize, j: usize| RatePoint::new(sx * i as f64 / n as f64, sy * j as f64 / n as f64);

    let regions = [RegionId::Inner, RegionId::R1, RegionId::R2, RegionId::Outer];
    let mut member = vec![[false; 4]; n * n];
    let mut v = GeometryViolations::default();
    for i in 0..n {
        for j in 0..n {
            let p = point(i, j);
            let mut m = [false; 4];
            for (k, r) in regions.iter().enumerate() {
                m[k] = region_contains(params, *r, p)?;
            }
            if m[3] != (m[1] || m[2]) {
                v.outer_union += 1;
            }
            if m[0] && !region_contains(params, RegionId::Outer, p.scale(1.0 / (1.0 + 1e-9)))? {
                v.inner_in_outer += 1;
            }
            member[i * n + j] = m;
        }
    }
    for i in 0..n {
        for j in 0..n {
            let m = member[i * n + j];
            for k in 0..4 {
                if !m[k] {
                    continue;
                }
                if i > 0 && !member[(i - 1) * n + j][k] {
                    v.down_closed += 1;
                }
                if j > 0 && !member[i * n + j - 1][k] {
                    v.down_closed += 1;
                }
            }
        }
    }
    Ok(v)
}

pub fn check_region_geometry(config: &ExperimentConfig) -> Result<CheckResult, HarnessError> {
    let start = Instant::now();
    let mut rng = SlotRng::new(point_seed(config.base_seed, 6, 0));
    let mut v = GeometryViolations::default();
    let mut sets = 0;
    while sets < 1000 {
        let params = random_params(&mut rng);
        if params.validate().is_err() || params.p_sd + params.p_sr == 0.0 {
            continue;
        }
        let g = geometry_violations(&params, 50)?;
        v.down_closed += g.down_closed;
        v.inner_in_outer += g.inner_in_outer;
        v.outer_union += g.outer_union;
        sets += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    Ok(CheckResult {
        id: 6,
        name: "region geometry",
        measured: v.total() as f64,
        target: 0.0,
        tolerance: 0.0,
        passed: v.total() == 0 && secs < 10.0,
        detail: format!(
            "{sets} parameter sets, violations: down-closed {}, inner in outer {}, outer union {}; {secs:.2} s (limit 10 s)",
            v.down_closed, v.inner_in_outer, v.outer_union
        ),
        elapsed: start.elapsed(),
    })
}

pub fn check_conservation_determinism(
    config: &ExperimentConfig,
    jobs: usize,
    ledger: &RunLedger,
) -> Result<CheckResult, HarnessError> {
    timed(7, "conservation and determinism", || {
        let cfg = ExperimentConfig {
            grid: Some(grid_or_default(config)?),
            ..config.clone()
        };
        let first = sweep_rows(&cfg, Mode::Original, 1)?;
        ledger.record_rows("sweep 1", &first);
        let second = sweep_rows(&cfg, Mode::Original, jobs)?;
        ledger.record_rows("sweep 2", &second);
        let identical = sweep_csv_bytes(&first)? == sweep_csv_bytes(&second)?;
        let (runs, failures) = ledger.snapshot();
        let mut detail = format!(
            "{runs} runs, {} conservation failures, sweep CSVs {}",
            failures.len(),
            if identical { "identical" } else { "differ" }
        );
        if let Some(first_failure) = failures.first() {
            detail.push_str(&format!(", first failure: {first_failure}"));
        }
        Ok((
            failures.len() as f64,
            0.0,
            0.0,
            failures.is_empty() && identical,
            detail,
        ))
    })
}

pub fn check_dominance(
    config: &ExperimentConfig,
    jobs: usize,
    ledger: &RunLedger,
) -> Result<CheckResult, HarnessError> {
    timed(8, "dominance direction", || {
        let cfg = ExperimentConfig {
            grid: Some(grid_or_default(config)?),
            ..config.clone()
        };
        let original = sweep_rows(&cfg, Mode::Original, jobs)?;
        let dom_source = sweep_rows(&cfg, Mode::DomSource, jobs)?;
        let dom_relay = sweep_rows(&cfg, Mode::DomRelay, jobs)?;
        ledger.record_rows("original", &original);
        ledger.record_rows("dom_source", &dom_source);
        ledger.record_rows("dom_relay", &dom_relay);
        let mut violations = 0;
        let mut dominated = 0;
        for ((o, s), r) in original.iter().zip(&dom_source).zip(&dom_relay) {
            if s.verdict == Verdict::Stable || r.verdict == Verdict::Stable {
                dominated += 1;
                if o.verdict != Verdict::Stable {
                    violations += 1;
                }
            }
        }
        Ok((
            violations as f64,
            0.0,
            0.0,
            violations == 0,
            format!(
                "{} grid points, {dominated} stable in a dominant system, {violations} not stable in original",
                original.len()
            ),
        ))
    })
}

/// Runs all eight checks and writes one line per check to `out`.
///
/// The conservation check runs last so that it covers every simulation in
/// the suite; lines are still written in check order.
pub fn run_acceptance<W: Write>(
    config: &ExperimentConfig,
    jobs: usize,
    mut out: W,
) -> Result<AcceptanceReport, HarnessError> {
    let ledger = RunLedger::default();
    let mut results = vec![
        check_battery_occupancy(config, &ledger)?,
        check_saturated_throughput(config, &ledger)?,
        check_dominant_relay_rate(config, &ledger)?,
        check_inner_sufficiency(config, jobs, &ledger)?,
        check_outer_necessity(config, jobs, &ledger)?,
        check_region_geometry(config)?,
        check_dominance(config, jobs, &ledger)?,
        check_conservation_determinism(config, jobs, &ledger)?,
    ];
    results.sort_by_key(|r| r.id);
    for r in &results {
        writeln!(out, "{}", r.line())?;
    }
    let report = AcceptanceReport { results };
    let passed = report.results.iter().filter(|r| r.passed).count();
    writeln!(out, "{passed}/{} checks passed", report.results.len())?;
    Ok(report)
}
