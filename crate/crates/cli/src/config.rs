//! Experiment configuration: a JSON file overlaid with command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use dstsp_core::dynamics::{DynamicsModel, Sigma};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: line {line}, column {column}: {msg}")]
    Parse { path: String, line: usize, column: usize, msg: String },
    #[error("field `{field}`: {msg}")]
    Field { field: &'static str, msg: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl ConfigError {
    fn field(field: &'static str, msg: impl Into<String>) -> Self {
        Self::Field { field, msg: msg.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    EstimateAgility,
    BuildCover,
    RunDstsp,
    RunAdversarial,
    HcpSolve,
    CheckBounds,
    CboCheck,
    Concentration,
}

impl Subcommand {
    pub fn name(&self) -> &'static str {
        match self {
            Self::EstimateAgility => "estimate-agility",
            Self::BuildCover => "build-cover",
            Self::RunDstsp => "run-dstsp",
            Self::RunAdversarial => "run-adversarial",
            Self::HcpSolve => "hcp-solve",
            Self::CheckBounds => "check-bounds",
            Self::CboCheck => "cbo-check",
            Self::Concentration => "concentration",
        }
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A model given by name (default parameters) or as a full JSON object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSpec {
    Name(String),
    Full(DynamicsModel),
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self::Name("euclidean2".into())
    }
}

impl ModelSpec {
    pub fn resolve(&self) -> Result<DynamicsModel, ConfigError> {
        let model = match self {
            Self::Full(m) => *m,
            Self::Name(name) => match name.as_str() {
                "euclidean2" => DynamicsModel::euclidean2(),
                "euclidean3" => DynamicsModel::Euclidean3 { c_pi: 1.0 },
                // the two-valued testbed: unit speed on the left half, double on the right
                "scaled_euclidean2" => DynamicsModel::ScaledEuclidean2 {
                    c_pi: 1.0,
                    sigma: Sigma::SplitX { x_split: 0.5, left: 1.0, right: 2.0 },
                },
                "reeds_shepp" => DynamicsModel::ReedsShepp { c_pi: 1.0, r_min: 1.0 },
                "diff_drive" => DynamicsModel::DiffDrive { c_pi: 1.0, omega_max: 1.0 },
                other => return Err(ConfigError::field("model", format!("unknown model `{other}`"))),
            },
        };
        model.validate().map_err(|e| ConfigError::field("model", e))?;
        Ok(model)
    }
}

impl FromStr for ModelSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.trim_start().starts_with('{') {
            serde_json::from_str::<DynamicsModel>(s).map(Self::Full).map_err(|e| e.to_string())
        } else {
            Ok(Self::Name(s.to_string()))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub subcommand: Option<Subcommand>,
    pub model: ModelSpec,
    /// `uniform`, `linear` (f = 2x), `worst` (f proportional to 1/g),
    /// `anti` (f proportional to g) or a path to a GridField JSON file.
    pub density: String,
    pub n: Option<Vec<usize>>,
    pub seeds: usize,
    pub seed: u64,
    pub delta: f64,
    /// Balls-in-bins exponent for `concentration`, regularization level for
    /// `cbo-check`.
    pub zeta: Option<Vec<f64>>,
    pub eps0: Option<f64>,
    #[serde(skip)]
    pub threads: Option<usize>,
    #[serde(skip)]
    pub assert: bool,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    pub instance: Option<PathBuf>,
    pub lambda: Vec<f64>,
    pub m: Vec<usize>,
    pub trials: usize,
    /// Cells per axis of density and agility grids.
    pub grid: Option<usize>,
    /// Reachable-set samples per agility estimate.
    pub samples: usize,
    pub s: u32,
    /// Cover branching; measured when absent.
    pub b: Option<u64>,
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
    #[serde(rename = "J")]
    pub j: Option<f64>,
    pub int_g_inv: Option<f64>,
    pub symmetric: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            subcommand: None,
            model: ModelSpec::default(),
            density: "uniform".into(),
            n: None,
            seeds: 1,
            seed: 0,
            delta: 0.3,
            zeta: None,
            eps0: None,
            threads: None,
            assert: false,
            out: None,
            instance: None,
            lambda: vec![0.25, 0.5],
            m: vec![4, 16],
            trials: 10_000,
            grid: None,
            samples: 20_000,
            s: 2,
            b: None,
            alpha: None,
            gamma: None,
            j: None,
            int_g_inv: None,
            symmetric: true,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str, path: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Parse {
            path: path.to_string(),
            line: e.line(),
            column: e.column(),
            msg: e.to_string(),
        })
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: shown.clone(), source })?;
        Self::from_json_str(&text, &shown)
    }

    pub fn subcommand(&self) -> Result<Subcommand, ConfigError> {
        self.subcommand.ok_or_else(|| ConfigError::field("subcommand", "missing"))
    }

    pub fn ns(&self) -> Vec<usize> {
        self.n.clone().unwrap_or_else(|| match self.subcommand {
            Some(Subcommand::CboCheck) => vec![8],
            Some(Subcommand::Concentration | Subcommand::CheckBounds) => vec![10_000],
            Some(Subcommand::HcpSolve) => vec![100],
            _ => vec![1024],
        })
    }

    pub fn zetas(&self) -> Vec<f64> {
        self.zeta.clone().unwrap_or_else(|| match self.subcommand {
            Some(Subcommand::CboCheck) => vec![0.05],
            _ => vec![0.5, 2.0 / 3.0],
        })
    }

    pub fn grid_cells(&self) -> usize {
        self.grid.unwrap_or(match self.subcommand {
            Some(Subcommand::EstimateAgility) => 4,
            _ => 32,
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.subcommand()?;
        self.model.resolve()?;
        let ns = self.ns();
        if ns.is_empty() {
            return Err(ConfigError::field("n", "list is empty"));
        }
        if ns.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ConfigError::field("n", format!("{ns:?} is not strictly ascending")));
        }
        if self.seeds == 0 {
            return Err(ConfigError::field("seeds", "must be at least 1"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(ConfigError::field("delta", format!("{} outside (0, 1)", self.delta)));
        }
        if self.zetas().is_empty() || self.zetas().iter().any(|z| !(*z > 0.0 && *z < 1.0)) {
            return Err(ConfigError::field("zeta", format!("{:?}: values must lie in (0, 1)", self.zetas())));
        }
        if let Some(e) = self.eps0 {
            if !(e > 0.0 && e.is_finite()) {
                return Err(ConfigError::field("eps0", format!("{e} is not positive")));
            }
        }
        if self.lambda.iter().any(|l| !(*l >= 0.0)) {
            return Err(ConfigError::field("lambda", "budgets must be nonnegative"));
        }
        if self.m.is_empty() || self.m.contains(&0) {
            return Err(ConfigError::field("m", "bin counts must be positive"));
        }
        if self.grid_cells() == 0 {
            return Err(ConfigError::field("grid", "must be positive"));
        }
        if self.samples == 0 {
            return Err(ConfigError::field("samples", "must be positive"));
        }
        if self.s < 2 {
            return Err(ConfigError::field("s", "scale must be at least 2"));
        }
        if self.threads == Some(0) {
            return Err(ConfigError::field("threads", "must be at least 1"));
        }
        Ok(())
    }
}

/// Parses a comma-separated list such as `256,1024,4096`.
pub fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>, String>
where
    T::Err: fmt::Display,
{
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse::<T>().map_err(|e| format!("`{p}`: {e}")))
        .collect()
}

/// Comma-separated command-line list.
#[derive(Debug, Clone, PartialEq)]
pub struct List<T>(pub Vec<T>);

impl<T: FromStr> FromStr for List<T>
where
    T::Err: fmt::Display,
{
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        parse_list(s).map(List)
    }
}
