use thiserror::Error;

use super::run::{run, SimStats};
use super::slot::Mode;
use crate::model::SystemParams;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifierError {
    #[error("stable slope threshold {lo} must be below the unstable threshold {hi}")]
    Thresholds { lo: f64, hi: f64 },
    #[error("{0} must be at least 1")]
    Zero(&'static str),
}

/// Settings for the drift-based stability test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifierConfig {
    pub n_slots: u64,
    /// Samples at or before this slot are ignored by the fit.
    pub burn_in: u64,
    pub stride: u64,
    /// Slope (packets/slot) below which a run may be called stable.
    pub slope_stable: f64,
    /// Slope above which a run is called unstable.
    pub slope_unstable: f64,
    /// A stable run must end with fewer than this many packets queued.
    pub queue_cap: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            n_slots: 1_000_000,
            burn_in: 100_000,
            stride: 1_000,
            slope_stable: 1e-4,
            slope_unstable: 1e-3,
            queue_cap: 10_000,
        }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<(), ClassifierError> {
        if self.slope_stable.partial_cmp(&self.slope_unstable) != Some(std::cmp::Ordering::Less) {
            return Err(ClassifierError::Thresholds {
                lo: self.slope_stable,
                hi: self.slope_unstable,
            });
        }
        if self.n_slots == 0 {
            return Err(ClassifierError::Zero("n_slots"));
        }
        if self.stride == 0 {
            return Err(ClassifierError::Zero("stride"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Stable,
    Unstable,
    Indeterminate,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Stable => "stable",
            Verdict::Unstable => "unstable",
            Verdict::Indeterminate => "indeterminate",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityVerdict {
    pub verdict: Verdict,
    /// Least-squares slope of `q_s + q_r` against slot, post burn-in.
    pub drift_slope: f64,
    pub mean_q_s: f64,
    pub mean_q_r: f64,
}

/// Ordinary least-squares slope of `ys` against `xs`.
fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (sxy, sxx) = xs.iter().zip(ys).fold((0.0, 0.0), |(sxy, sxx), (x, y)| {
        (sxy + (x - mx) * (y - my), sxx + (x - mx) * (x - mx))
    });
    if sxx > 0.0 {
        sxy / sxx
    } else {
        0.0
    }
}

/// Classifies a finished run from its queue samples.
///
/// With fewer than two post-burn-in samples there is nothing to fit and the
/// verdict is `Indeterminate`.
pub fn classify_stats(stats: &SimStats, config: &ClassifierConfig) -> StabilityVerdict {
    let samples: Vec<_> = stats
        .queue_trace
        .iter()
        .filter(|s| s.slot > config.burn_in)
        .collect();
    if samples.len() < 2 {
        return StabilityVerdict {
            verdict: Verdict::Indeterminate,
            drift_slope: 0.0,
            mean_q_s: stats.final_state.q_s as f64,
            mean_q_r: stats.final_state.q_r as f64,
        };
    }

    let n = samples.len() as f64;
    let xs: Vec<f64> = samples.iter().map(|s| s.slot as f64).collect();
    let ys: Vec<f64> = samples.iter().map(|s| (s.q_s + s.q_r) as f64).collect();
    let drift_slope = ls_slope(&xs, &ys);
    let mean_q_s = samples.iter().map(|s| s.q_s as f64).sum::<f64>() / n;
    let mean_q_r = samples.iter().map(|s| s.q_r as f64).sum::<f64>() / n;

    let verdict = if drift_slope > config.slope_unstable {
        Verdict::Unstable
    } else if drift_slope < config.slope_stable
        && stats.final_state.total_queue() < config.queue_cap
    {
        Verdict::Stable
    } else {
        Verdict::Indeterminate
    };
    StabilityVerdict {
        verdict,
        drift_slope,
        mean_q_s,
        mean_q_r,
    }
}

/// Runs the simulator in `mode` and classifies the result, returning the
/// raw statistics alongside the verdict.
pub fn classify_run(
    params: &SystemParams,
    mode: Mode,
    seed: u64,
    config: &ClassifierConfig,
) -> Result<(StabilityVerdict, SimStats), ClassifierError> {
    config.validate()?;
    let stats = run(params, mode, seed, config.n_slots, config.stride);
    Ok((classify_stats(&stats, config), stats))
}

/// Drift test of the original protocol at the rates stored in `params`.
pub fn classify_stability(
    params: &SystemParams,
    seed: u64,
    config: &ClassifierConfig,
) -> Result<StabilityVerdict, ClassifierError> {
    classify_run(params, Mode::Original, seed, config).map(|(v, _)| v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_a_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [3.0, 5.0, 7.0, 9.0];
        assert!((ls_slope(&xs, &ys) - 2.0).abs() < 1e-12);
        assert_eq!(ls_slope(&[1.0, 1.0], &[0.0, 5.0]), 0.0);
    }

    #[test]
    fn rejects_inverted_thresholds() {
        let cfg = ClassifierConfig {
            slope_stable: 1e-3,
            slope_unstable: 1e-3,
            ..Default::default()
        };
        assert!(matches!(
            cfg.validate(),
            Err(ClassifierError::Thresholds { .. })
        ));
        assert!(ClassifierConfig::default().validate().is_ok());
    }

    #[test]
    fn too_few_samples_is_indeterminate() {
        let stats = SimStats::default();
        let v = classify_stats(&stats, &ClassifierConfig::default());
        assert_eq!(v.verdict, Verdict::Indeterminate);
    }
}
