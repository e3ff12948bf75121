//! Flat `key = value` experiment configuration.
//!
//! One pair per line. `#` starts a comment, blank lines are ignored, keys are
//! unique. Recognized keys:
//!
//! | key                                   | default     |
//! |---------------------------------------|-------------|
//! | `delta_s delta_r q_s q_r p_sd p_rd p_sr` | required |
//! | `lambda_s lambda_r` (single point)    | 0           |
//! | `lambda_s_max lambda_r_max steps`     | no grid     |
//! | `n_slots`                             | 1000000     |
//! | `burn_in`                             | 100000      |
//! | `stride`                              | 1000        |
//! | `base_seed`                           | 1           |
//! | `mode`                                | `original`  |
//! | `csv_out svg_out`                     | unset       |
//!
//! The three grid keys must appear together.

use std::collections::HashMap;
use std::path::PathBuf;

use ehrelay::sim::{ClassifierConfig, Mode};
use ehrelay::{RatePoint, SystemParams};

use crate::error::ConfigError;

const KEYS: [&str; 19] = [
    "lambda_s",
    "lambda_r",
    "lambda_s_max",
    "lambda_r_max",
    "steps",
    "delta_s",
    "delta_r",
    "q_s",
    "q_r",
    "p_sd",
    "p_rd",
    "p_sr",
    "n_slots",
    "burn_in",
    "stride",
    "base_seed",
    "mode",
    "csv_out",
    "svg_out",
];

/// Rate grid for sweeps. Axis values are `k · max / steps` for
/// `k = 0..steps`: both zero lines are included, the maxima are not.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lambda_s_max: f64,
    pub lambda_r_max: f64,
    pub steps: usize,
}

impl GridSpec {
    pub fn point(&self, row: usize, col: usize) -> RatePoint {
        let n = self.steps as f64;
        RatePoint::new(
            self.lambda_s_max * row as f64 / n,
            self.lambda_r_max * col as f64 / n,
        )
    }

    pub fn len(&self) -> usize {
        self.steps * self.steps
    }

    pub fn is_empty(&self) -> bool {
        self.steps == 0
    }

    /// `(row, col)` pairs in row-major order; rows index `λ_S`.
    pub fn indices(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.steps).flat_map(move |r| (0..self.steps).map(move |c| (r, c)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Network parameters; `lambda_s`/`lambda_r` hold the single-point rates.
    pub params: SystemParams,
    pub grid: Option<GridSpec>,
    pub sim: ClassifierConfig,
    pub base_seed: u64,
    pub mode: Mode,
    pub csv_out: Option<PathBuf>,
    pub svg_out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn point(&self) -> RatePoint {
        self.params.rates()
    }
}

struct Entries {
    values: HashMap<&'static str, (usize, String)>,
}

impl Entries {
    fn line_of(&self, key: &str) -> Option<usize> {
        self.values.get(key).map(|(line, _)| *line)
    }

    fn raw(&self, key: &'static str) -> Option<(usize, &str)> {
        self.values.get(key).map(|(line, v)| (*line, v.as_str()))
    }

    fn parse<T: std::str::FromStr>(&self, key: &'static str) -> Result<Option<T>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some((line, v)) => v.parse().map(Some).map_err(|e| ConfigError::Line {
                line,
                message: format!("invalid value '{v}' for {key}: {e}"),
            }),
        }
    }

    fn required_f64(&self, key: &'static str) -> Result<f64, ConfigError> {
        self.parse(key)?.ok_or(ConfigError::Missing(key))
    }
}

fn tokenize(text: &str) -> Result<Entries, ConfigError> {
    let mut values = HashMap::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Line {
            line,
            message: format!("expected key=value, found '{content}'"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        let key = *KEYS
            .iter()
            .find(|k| **k == key)
            .ok_or_else(|| ConfigError::Line {
                line,
                message: format!("unknown key '{key}'"),
            })?;
        if value.is_empty() {
            return Err(ConfigError::Line {
                line,
                message: format!("empty value for {key}"),
            });
        }
        if values.insert(key, (line, value.to_string())).is_some() {
            return Err(ConfigError::Line {
                line,
                message: format!("duplicate key '{key}'"),
            });
        }
    }
    Ok(Entries { values })
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let e = tokenize(text)?;

    let params = SystemParams {
        lambda_s: e.parse("lambda_s")?.unwrap_or(0.0),
        lambda_r: e.parse("lambda_r")?.unwrap_or(0.0),
        delta_s: e.required_f64("delta_s")?,
        delta_r: e.required_f64("delta_r")?,
        q_s: e.required_f64("q_s")?,
        q_r: e.required_f64("q_r")?,
        p_sd: e.required_f64("p_sd")?,
        p_rd: e.required_f64("p_rd")?,
        p_sr: e.required_f64("p_sr")?,
    };
    if let Err(violations) = params.validate() {
        let errors = violations
            .into_iter()
            .map(|v| (e.line_of(v.field), v.to_string()))
            .collect();
        return Err(ConfigError::Params(errors));
    }

    let grid = parse_grid(&e)?;

    let defaults = ClassifierConfig::default();
    let sim = ClassifierConfig {
        n_slots: e.parse("n_slots")?.unwrap_or(defaults.n_slots),
        burn_in: e.parse("burn_in")?.unwrap_or(defaults.burn_in),
        stride: e.parse("stride")?.unwrap_or(defaults.stride),
        ..defaults
    };
    for (key, value) in [("n_slots", sim.n_slots), ("stride", sim.stride)] {
        if value == 0 {
            return Err(ConfigError::Line {
                line: e.line_of(key).unwrap_or(0),
                message: format!("{key} must be at least 1"),
            });
        }
    }

    let mode = match e.raw("mode") {
        None => Mode::Original,
        Some((line, v)) => v
            .parse()
            .map_err(|message| ConfigError::Line { line, message })?,
    };

    Ok(ExperimentConfig {
        params,
        grid,
        sim,
        base_seed: e.parse("base_seed")?.unwrap_or(1),
        mode,
        csv_out: e.raw("csv_out").map(|(_, v)| PathBuf::from(v)),
        svg_out: e.raw("svg_out").map(|(_, v)| PathBuf::from(v)),
    })
}

fn parse_grid(e: &Entries) -> Result<Option<GridSpec>, ConfigError> {
    let s_max: Option<f64> = e.parse("lambda_s_max")?;
    let r_max: Option<f64> = e.parse("lambda_r_max")?;
    let steps: Option<usize> = e.parse("steps")?;
    let (s_max, r_max, steps) = match (s_max, r_max, steps) {
        (None, None, None) => return Ok(None),
        (Some(s), Some(r), Some(n)) => (s, r, n),
        _ => {
            let line = ["lambda_s_max", "lambda_r_max", "steps"]
                .iter()
                .find_map(|k| e.line_of(k))
                .unwrap_or(0);
            return Err(ConfigError::Line {
                line,
                message: "lambda_s_max, lambda_r_max and steps must be given together".into(),
            });
        }
    };
    for (key, v) in [("lambda_s_max", s_max), ("lambda_r_max", r_max)] {
        if !(v > 0.0 && v <= 1.0) {
            return Err(ConfigError::Line {
                line: e.line_of(key).unwrap_or(0),
                message: format!("{key} out of (0,1]"),
            });
        }
    }
    if steps < 2 {
        return Err(ConfigError::Line {
            line: e.line_of("steps").unwrap_or(0),
            message: "steps must be at least 2".into(),
        });
    }
    Ok(Some(GridSpec {
        lambda_s_max: s_max,
        lambda_r_max: r_max,
        steps,
    }))
}
