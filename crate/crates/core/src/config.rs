//! Run and sweep configuration files.
//!
//! Configs are TOML. Unknown keys are rejected everywhere. A file with a
//! `[vary]` table is a sweep; otherwise it describes a single run.
//!
//! ```toml
//! n_qubits = 10
//! method = "symmetry"          # or "baseline"
//! num_layers = 1
//!
//! [dist]
//! kind = "normal"
//! mean = 0.0
//! variance = 0.01
//!
//! [grid]                       # optional, defaults to the density's range
//! min = -0.5
//! max = 0.5
//! convention = "midpoint"
//!
//! [vary]                       # sweeps only, exactly one key
//! bond_dims = [2, 4, 8]
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::ExportFormat;
use crate::dist::{DistSpec, Grid, GridConvention};
use crate::mps::DEFAULT_DENSE_LIMIT;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config field `{field}`: {message}")]
    Invalid {
        field: &'static str,
        message: String,
    },
}

fn invalid(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field,
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Prepare the left half and mirror it with a reflection qubit.
    #[default]
    Symmetry,
    /// Disentangle the full distribution directly.
    Baseline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub min: f64,
    pub max: f64,
    pub convention: GridConvention,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default)]
    pub report_path: Option<PathBuf>,
    #[serde(default)]
    pub circuit_path: Option<PathBuf>,
    #[serde(default)]
    pub format: ReportFormat,
    #[serde(default)]
    pub circuit_format: ExportFormat,
}

/// Fully resolved single-run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub dist: DistSpec,
    pub grid: GridConfig,
    pub n_qubits: usize,
    pub method: Method,
    pub num_layers: usize,
    /// `None` means the default working bond dimension.
    pub chi_work: Option<usize>,
    pub assume_symmetric: bool,
    pub early_stop: bool,
    pub outputs: Outputs,
}

impl RunConfig {
    /// Config with every optional field at its default.
    pub fn new(dist: DistSpec, n_qubits: usize) -> Self {
        let (min, max) = dist.default_range();
        RunConfig {
            dist,
            grid: GridConfig {
                min,
                max,
                convention: GridConvention::Midpoint,
            },
            n_qubits,
            method: Method::Symmetry,
            num_layers: 1,
            chi_work: None,
            assume_symmetric: false,
            early_stop: false,
            outputs: Outputs::default(),
        }
    }

    pub fn grid(&self) -> Grid {
        Grid {
            min: self.grid.min,
            max: self.grid.max,
            n_qubits: self.n_qubits,
            convention: self.grid.convention,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_qubits < 3 {
            return Err(invalid(
                "n_qubits",
                format!("must be >= 3, got {}", self.n_qubits),
            ));
        }
        if self.n_qubits > DEFAULT_DENSE_LIMIT {
            return Err(invalid(
                "n_qubits",
                format!("must be <= {DEFAULT_DENSE_LIMIT}, got {}", self.n_qubits),
            ));
        }
        if self.num_layers == 0 {
            return Err(invalid("num_layers", "must be >= 1"));
        }
        if self.chi_work == Some(0) {
            return Err(invalid("chi_work", "must be >= 1"));
        }
        self.dist
            .validate()
            .map_err(|e| invalid("dist", e.to_string()))?;
        self.grid()
            .validate()
            .map_err(|e| invalid("grid", e.to_string()))?;
        if self.method == Method::Symmetry
            && !self.assume_symmetric
            && !self.dist.is_symmetric_on(&self.grid())
        {
            return Err(invalid(
                "method",
                "symmetry needs a density centered on the grid or assume_symmetric = true",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Vary {
    /// Bond dimensions χ; each maps to `log2 χ` layers.
    BondDims(Vec<usize>),
    QubitCounts(Vec<usize>),
    LayerCounts(Vec<usize>),
}

impl Vary {
    pub fn name(&self) -> &'static str {
        match self {
            Vary::BondDims(_) => "bond_dim",
            Vary::QubitCounts(_) => "n_qubits",
            Vary::LayerCounts(_) => "num_layers",
        }
    }

    pub fn values(&self) -> &[usize] {
        match self {
            Vary::BondDims(v) | Vary::QubitCounts(v) | Vary::LayerCounts(v) => v,
        }
    }

    fn field(&self) -> &'static str {
        match self {
            Vary::BondDims(_) => "vary.bond_dims",
            Vary::QubitCounts(_) => "vary.qubit_counts",
            Vary::LayerCounts(_) => "vary.layer_counts",
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let field = self.field();
        let values = self.values();
        if values.is_empty() {
            return Err(invalid(field, "must not be empty"));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid(field, "must be strictly increasing"));
        }
        match self {
            Vary::BondDims(v) => {
                if let Some(bad) = v.iter().find(|&&x| x < 2 || !x.is_power_of_two()) {
                    return Err(invalid(field, format!("{bad} is not a power of two >= 2")));
                }
            }
            Vary::QubitCounts(v) => {
                if let Some(bad) = v.iter().find(|&&x| !(3..=DEFAULT_DENSE_LIMIT).contains(&x)) {
                    return Err(invalid(
                        field,
                        format!("{bad} is outside 3..={DEFAULT_DENSE_LIMIT}"),
                    ));
                }
            }
            Vary::LayerCounts(v) => {
                if v[0] == 0 {
                    return Err(invalid(field, "layer counts must be >= 1"));
                }
            }
        }
        Ok(())
    }
}

/// Number of layers addressing bond dimension `chi = 2^L`.
pub fn layers_for_bond_dim(chi: usize) -> usize {
    chi.trailing_zeros() as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub base: RunConfig,
    pub vary: Vary,
}

impl SweepConfig {
    /// The run configuration for the `index`-th varied value.
    pub fn run_for(&self, value: usize) -> RunConfig {
        let mut cfg = self.base.clone();
        match self.vary {
            Vary::BondDims(_) => cfg.num_layers = layers_for_bond_dim(value),
            Vary::QubitCounts(_) => cfg.n_qubits = value,
            Vary::LayerCounts(_) => cfg.num_layers = value,
        }
        cfg
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Config {
    Run(RunConfig),
    Sweep(SweepConfig),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    min: Option<f64>,
    max: Option<f64>,
    convention: Option<GridConvention>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    dist: DistSpec,
    n_qubits: usize,
    grid: Option<RawGrid>,
    method: Option<Method>,
    num_layers: Option<usize>,
    chi_work: Option<usize>,
    assume_symmetric: Option<bool>,
    early_stop: Option<bool>,
    outputs: Option<Outputs>,
    vary: Option<Vary>,
}

/// Command-line settings applied on top of the file before validation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub assume_symmetric: bool,
}

/// Parses and validates config text. Relative table paths are resolved
/// against `base_dir` when given.
pub fn parse_config_str(text: &str, base_dir: Option<&Path>) -> Result<Config, ConfigError> {
    parse_config_str_with(text, base_dir, Overrides::default())
}

pub fn parse_config_str_with(
    text: &str,
    base_dir: Option<&Path>,
    overrides: Overrides,
) -> Result<Config, ConfigError> {
    let raw: RawConfig = toml::from_str(text)?;
    let mut dist = raw.dist;
    if let (DistSpec::Table { path }, Some(dir)) = (&mut dist, base_dir) {
        if path.is_relative() {
            *path = dir.join(&*path);
        }
    }
    let mut cfg = RunConfig::new(dist, raw.n_qubits);
    if let Some(g) = raw.grid {
        if let Some(min) = g.min {
            cfg.grid.min = min;
        }
        if let Some(max) = g.max {
            cfg.grid.max = max;
        }
        if let Some(conv) = g.convention {
            cfg.grid.convention = conv;
        }
    }
    cfg.method = raw.method.unwrap_or_default();
    cfg.num_layers = raw.num_layers.unwrap_or(1);
    cfg.chi_work = raw.chi_work;
    cfg.assume_symmetric = raw.assume_symmetric.unwrap_or(false) || overrides.assume_symmetric;
    cfg.early_stop = raw.early_stop.unwrap_or(false);
    if let Some(outputs) = raw.outputs {
        cfg.outputs = outputs;
    }

    match raw.vary {
        None => {
            cfg.validate()?;
            Ok(Config::Run(cfg))
        }
        Some(vary) => {
            vary.validate()?;
            let sweep = SweepConfig { base: cfg, vary };
            for &v in sweep.vary.values() {
                sweep.run_for(v).validate()?;
            }
            Ok(Config::Sweep(sweep))
        }
    }
}

pub fn parse_config(path: &Path) -> Result<Config, ConfigError> {
    parse_config_with(path, Overrides::default())
}

pub fn parse_config_with(path: &Path, overrides: Overrides) -> Result<Config, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_str_with(&text, path.parent(), overrides)
}
