//! Experiment driver for the dynamic stochastic TSP laboratory: configuration,
//! seeding, subcommand dispatch and report emission.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod presets;
pub mod report;

use std::io::Write;

use anyhow::{Context, Result};
use serde::Serialize;

pub use commands::Violations;
pub use config::{ConfigError, ExperimentConfig, ModelSpec, Subcommand};

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: Subcommand,
    pub config: ExperimentConfig,
    /// Git-style blob hash of the config echo followed by every input file.
    pub input_hash: String,
    /// Output file name to SHA-256.
    pub outputs: std::collections::BTreeMap<String, String>,
}

/// Result of a run: the properties checked under `--assert` that failed.
#[derive(Debug, Default)]
pub struct Outcome {
    pub violations: Violations,
}

/// Runs the configured subcommand. Tables go to files under `cfg.out` along
/// with a manifest; without an output directory the primary table goes to
/// `stdout`.
pub fn run(cfg: &ExperimentConfig, stdout: &mut dyn Write) -> Result<Outcome> {
    cfg.validate()?;
    let sub = cfg.subcommand()?;
    if let Some(dir) = &cfg.out {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut em = commands::Emitter { dir: cfg.out.as_deref(), stdout, files: Default::default() };
    let violations = commands::dispatch(cfg, &mut em)?;
    let files = std::mem::take(&mut em.files);
    if let Some(dir) = &cfg.out {
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            subcommand: sub,
            config: cfg.clone(),
            input_hash: input_hash(cfg)?,
            outputs: files,
        };
        let path = dir.join(format!("{sub}.manifest.json"));
        let text = serde_json::to_string_pretty(&manifest)? + "\n";
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    stdout.flush()?;
    Ok(Outcome { violations })
}

fn input_hash(cfg: &ExperimentConfig) -> Result<String> {
    let mut bytes = serde_json::to_vec(cfg)?;
    if let Some(p) = &cfg.instance {
        bytes.extend(std::fs::read(p).with_context(|| format!("reading {}", p.display()))?);
    }
    let density = std::path::Path::new(&cfg.density);
    if density.is_file() {
        bytes.extend(std::fs::read(density)?);
    }
    Ok(report::blob_hash(&bytes))
}
