//! Grid sweeps comparing simulated stability with the analytic regions.

use std::fs::File;
use std::io::{BufWriter, Write};

use ehrelay::regions::region_contains;
use ehrelay::sim::{classify_run, Mode, Verdict};
use ehrelay::{RatePoint, RegionId, SystemParams};
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::error::HarnessError;

pub const CSV_HEADER: [&str; 10] = [
    "lambda_s",
    "lambda_r",
    "verdict",
    "drift_slope",
    "mean_q_s",
    "mean_q_r",
    "in_inner",
    "in_r1",
    "in_r2",
    "in_outer",
];

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-point seed: `splitmix64(splitmix64(base_seed) ^ (row << 32 | col))`,
/// where `splitmix64` is the SplitMix64 output function (golden-gamma
/// increment followed by the standard 30/27/31 xor-shift-multiply mix).
pub fn point_seed(base_seed: u64, row: usize, col: usize) -> u64 {
    splitmix64(splitmix64(base_seed) ^ ((row as u64) << 32 | col as u64))
}

/// Maps `f` over `items` on `jobs` worker threads, preserving order.
/// `jobs == 1` runs on the calling thread; `jobs == 0` uses every core.
pub fn par_map<T, R, F>(items: &[T], jobs: usize, f: F) -> Result<Vec<R>, HarnessError>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R, HarnessError> + Sync + Send,
{
    if jobs == 1 {
        return items.iter().map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;
    pool.install(|| items.par_iter().map(f).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub lambda_s: f64,
    pub lambda_r: f64,
    pub verdict: Verdict,
    pub drift_slope: f64,
    pub mean_q_s: f64,
    pub mean_q_r: f64,
    pub in_inner: bool,
    pub in_r1: bool,
    pub in_r2: bool,
    pub in_outer: bool,
    /// Packet and energy conservation held throughout the run.
    pub conserved: bool,
}

impl SweepRow {
    pub fn point(&self) -> RatePoint {
        RatePoint::new(self.lambda_s, self.lambda_r)
    }

    fn record(&self) -> [String; 10] {
        let f = |x: f64| format!("{x:.6}");
        [
            f(self.lambda_s),
            f(self.lambda_r),
            self.verdict.name().to_string(),
            f(self.drift_slope),
            f(self.mean_q_s),
            f(self.mean_q_r),
            self.in_inner.to_string(),
            self.in_r1.to_string(),
            self.in_r2.to_string(),
            self.in_outer.to_string(),
        ]
    }
}

/// Analytic membership flags for one point.
pub fn memberships(params: &SystemParams, point: RatePoint) -> Result<[bool; 3], HarnessError> {
    Ok([
        region_contains(params, RegionId::Inner, point)?,
        region_contains(params, RegionId::R1, point)?,
        region_contains(params, RegionId::R2, point)?,
    ])
}

/// Classifies every grid point in `mode`. Rows come back in row-major order
/// (λ_S outer, λ_R inner) regardless of `jobs`.
pub fn sweep_rows(
    config: &ExperimentConfig,
    mode: Mode,
    jobs: usize,
) -> Result<Vec<SweepRow>, HarnessError> {
    let grid = config.grid.ok_or(HarnessError::MissingGrid)?;
    let cells: Vec<(usize, usize)> = grid.indices().collect();
    par_map(&cells, jobs, |&(row, col)| {
        let point = grid.point(row, col);
        let params = config.params.with_rates(point);
        let seed = point_seed(config.base_seed, row, col);
        let (v, stats) = classify_run(&params, mode, seed, &config.sim)?;
        let [in_inner, in_r1, in_r2] = memberships(&config.params, point)?;
        Ok(SweepRow {
            lambda_s: point.lambda_s,
            lambda_r: point.lambda_r,
            verdict: v.verdict,
            drift_slope: v.drift_slope,
            mean_q_s: v.mean_q_s,
            mean_q_r: v.mean_q_r,
            in_inner,
            in_r1,
            in_r2,
            in_outer: in_r1 || in_r2,
            conserved: stats.conservation_holds(),
        })
    })
}

/// Writes the sweep table: fixed header, six fractional digits, `\n` line
/// endings.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<(), HarnessError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.write_record(row.record())?;
    }
    w.flush()?;
    Ok(())
}

pub fn sweep_csv_bytes(rows: &[SweepRow]) -> Result<Vec<u8>, HarnessError> {
    let mut buf = Vec::new();
    write_sweep_csv(rows, &mut buf)?;
    Ok(buf)
}

/// Runs the configured sweep and writes `csv_out` / `svg_out` when set.
pub fn run_sweep(config: &ExperimentConfig, jobs: usize) -> Result<Vec<SweepRow>, HarnessError> {
    let rows = sweep_rows(config, config.mode, jobs)?;
    if let Some(path) = &config.csv_out {
        write_sweep_csv(&rows, BufWriter::new(File::create(path)?))?;
    }
    if let Some(path) = &config.svg_out {
        crate::svg::emit_region_svg(
            &config.params,
            crate::svg::DEFAULT_RESOLUTION,
            Some(&rows),
            path,
        )?;
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn small_config() -> ExperimentConfig {
        parse_config(
            "delta_s=0.6\ndelta_r=0.3\nq_s=0.5\nq_r=0.5\np_sd=0.4\np_rd=0.8\np_sr=0.5\n\
             lambda_s_max=0.245\nlambda_r_max=0.12\nsteps=2\n\
             n_slots=20000\nburn_in=2000\nstride=100\n",
        )
        .unwrap()
    }

    #[test]
    fn seeds_differ_per_cell() {
        let mut seeds: Vec<u64> = (0..8)
            .flat_map(|r| (0..8).map(move |c| point_seed(1, r, c)))
            .collect();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), 64);
        assert_ne!(point_seed(1, 0, 0), point_seed(2, 0, 0));
        assert_eq!(point_seed(7, 3, 4), point_seed(7, 3, 4));
    }

    #[test]
    fn two_by_two_grid() {
        let rows = sweep_rows(&small_config(), Mode::Original, 1).unwrap();
        assert_eq!(rows.len(), 4);
        let origin = rows[0];
        assert_eq!(origin.point(), RatePoint::ORIGIN);
        assert_eq!(origin.verdict, Verdict::Stable);
        assert!(origin.in_inner && origin.in_r1 && origin.in_r2 && origin.in_outer);
        let pts: Vec<_> = rows.iter().map(|r| (r.lambda_s, r.lambda_r)).collect();
        assert_eq!(
            pts,
            [(0.0, 0.0), (0.0, 0.06), (0.1225, 0.0), (0.1225, 0.06)]
        );
        for r in &rows {
            assert_eq!(r.in_outer, r.in_r1 || r.in_r2);
            assert!(r.conserved);
        }
    }

    #[test]
    fn csv_layout() {
        let rows = sweep_rows(&small_config(), Mode::Original, 1).unwrap();
        let text = String::from_utf8(sweep_csv_bytes(&rows).unwrap()).unwrap();
        let mut lines = text.split('\n');
        assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
        assert!(lines
            .next()
            .unwrap()
            .starts_with("0.000000,0.000000,stable,"));
        assert!(text.ends_with('\n') && !text.contains('\r'));
    }

    #[test]
    fn serial_and_parallel_agree() {
        let cfg = small_config();
        let serial = sweep_csv_bytes(&sweep_rows(&cfg, Mode::Original, 1).unwrap()).unwrap();
        let parallel = sweep_csv_bytes(&sweep_rows(&cfg, Mode::Original, 3).unwrap()).unwrap();
        assert_eq!(serial, parallel);
    }

    #[test]
    fn missing_grid() {
        let mut cfg = small_config();
        cfg.grid = None;
        assert!(matches!(
            sweep_rows(&cfg, Mode::Original, 1),
            Err(HarnessError::MissingGrid)
        ));
    }
}
