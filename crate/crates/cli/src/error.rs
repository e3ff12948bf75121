use std::fmt;

use ehrelay::regions::RegionError;
use ehrelay::sim::ClassifierError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("missing required key '{0}'")]
    Missing(&'static str),
    #[error("{}", ParamErrors(.0))]
    Params(Vec<(Option<usize>, String)>),
}

struct ParamErrors<'a>(&'a [(Option<usize>, String)]);

impl fmt::Display for ParamErrors<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (line, msg)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            match line {
                Some(line) => write!(f, "line {line}: {msg}")?,
                None => f.write_str(msg)?,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Region(#[from] RegionError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error("config has no sweep grid (set lambda_s_max, lambda_r_max and steps)")]
    MissingGrid,
    #[error("failed to build worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
