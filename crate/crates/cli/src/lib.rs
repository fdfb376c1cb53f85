//! Batch runner: TOML configuration in, reports and a manifest out.
//!
//! Scientific outputs are byte-for-byte reproducible for a fixed configuration
//! and seed. Wall-clock timestamps appear only in `manifest.json`.

pub mod config;
mod run;

use std::path::PathBuf;

use thiserror::Error;

pub use config::{load_config, Command, GridKindSpec, GridSpec, RunConfig, Shape, Template, Tolerances};
pub use run::{default_campaign, list_files, run_command, RunManifest, TaskRecord, TaskStatus, MANIFEST_FILE};

/// Environment variable overriding the output directory.
pub const OUT_ENV: &str = "DEEPWAVE_OUT";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("invalid value for `{key}`: {message}")]
    Invalid { key: String, message: String },
}

/// Failures that stop a run before any task starts or after all have joined.
#[derive(Debug, Error)]
pub enum RunError {
    #[error("output directory {}: {source}", path.display())]
    Output { path: PathBuf, source: std::io::Error },

    #[error("thread pool: {0}")]
    Threads(String),

    #[error(transparent)]
    Core(#[from] deepwave::Error),
}

/// Command-line overrides, applied on top of the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub tolerance_scale: Option<f64>,
}

/// Output directory precedence: flag, then `DEEPWAVE_OUT`, then the file.
pub fn apply_overrides(cfg: &mut RunConfig, o: &Overrides, env_out: Option<PathBuf>) -> Result<(), ConfigError> {
    if let Some(out) = o.out.clone().or(env_out) {
        cfg.out = out;
    }
    if let Some(seed) = o.seed {
        cfg.seed = seed;
    }
    if let Some(scale) = o.tolerance_scale {
        cfg.scale_tolerances(scale)?;
    }
    Ok(())
}
