//! `mpd-prep`: runs, sweeps, circuit export and MPS inspection driven by a
//! TOML config.
//!
//! Exit codes: 0 on success, 2 on invalid arguments or config, 1 on runtime
//! failures.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mpd_core::circuit::{export_circuit, ExportFormat};
use mpd_core::config::{
    parse_config_with, Config, ConfigError, Overrides, ReportFormat, RunConfig, SweepConfig,
};
use mpd_core::dist::amplitudes;
use mpd_core::mps::Mps;
use mpd_core::pipeline::{
    run, sweep, working_target, write_report_csv, write_sweep_csv, PipelineError, Stage,
};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Parser)]
#[command(
    name = "mpd-prep",
    version,
    about = "Low-depth amplitude-encoding circuits for discretized densities"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct Common {
    /// TOML config file.
    #[arg(long)]
    config: PathBuf,
    /// Output file; defaults to the config's output path, then stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Treat the target as reflection symmetric even if it cannot be proven.
    #[arg(long)]
    assume_symmetric: bool,
    /// Recorded in reports; only the randomized test suites consume seeds.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TableFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CircuitFormat {
    Json,
    QasmLike,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the full pipeline once and write a report.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        format: Option<TableFormat>,
    },
    /// Run every point of a sweep config and write one row per point.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "csv")]
        format: TableFormat,
    },
    /// Build the preparation circuit and export it.
    Export {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        format: Option<CircuitFormat>,
    },
    /// Compress the working target into an MPS and describe it.
    InspectMps {
        #[command(flatten)]
        common: Common,
        /// Bond-dimension cap; exact compression when omitted.
        #[arg(long)]
        chi: Option<usize>,
        /// Include every site tensor in the output.
        #[arg(long)]
        tensors: bool,
    },
}

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("{0}")]
    Usage(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 2,
            CliError::Pipeline(e) if e.stage == Stage::Validate => 2,
            _ => 1,
        }
    }
}

fn load(common: &Common) -> Result<Config, CliError> {
    let overrides = Overrides {
        assume_symmetric: common.assume_symmetric,
    };
    Ok(parse_config_with(&common.config, overrides)?)
}

fn load_run(common: &Common) -> Result<RunConfig, CliError> {
    match load(common)? {
        Config::Run(c) => Ok(c),
        Config::Sweep(_) => Err(CliError::Usage(format!(
            "{} is a sweep config; use the `sweep` subcommand",
            common.config.display()
        ))),
    }
}

fn load_sweep(common: &Common) -> Result<SweepConfig, CliError> {
    match load(common)? {
        Config::Sweep(s) => Ok(s),
        Config::Run(_) => Err(CliError::Usage(format!(
            "{} has no [vary] table; use the `run` subcommand",
            common.config.display()
        ))),
    }
}

/// Writes `bytes` to `path`, or to stdout when `path` is `None`.
fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|source| CliError::Io {
            path: p.display().to_string(),
            source,
        }),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(bytes)
                .and_then(|_| out.flush())
                .map_err(|source| CliError::Io {
                    path: "stdout".into(),
                    source,
                })
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    text.push('\n');
    Ok(text.into_bytes())
}

fn circuit_format(f: CircuitFormat) -> ExportFormat {
    match f {
        CircuitFormat::Json => ExportFormat::Json,
        CircuitFormat::QasmLike => ExportFormat::QasmLike,
    }
}

fn cmd_run(common: &Common, format: Option<TableFormat>) -> Result<(), CliError> {
    let config = load_run(common)?;
    let mut out = run(&config)?;
    out.report.seed = common.seed;

    let format = format.unwrap_or(match config.outputs.format {
        ReportFormat::Json => TableFormat::Json,
        ReportFormat::Csv => TableFormat::Csv,
    });
    let bytes = match format {
        TableFormat::Json => to_json(&out.report)?,
        TableFormat::Csv => {
            let mut buf = Vec::new();
            write_report_csv(&out.report, &mut buf)?;
            buf
        }
    };
    let target = common
        .out
        .as_deref()
        .or(config.outputs.report_path.as_deref());
    emit(target, &bytes)?;

    if let Some(path) = &config.outputs.circuit_path {
        let text = export_circuit(&out.circuit, config.outputs.circuit_format)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        emit(Some(path), text.as_bytes())?;
    }
    Ok(())
}

fn cmd_sweep(common: &Common, format: TableFormat) -> Result<(), CliError> {
    let config = load_sweep(common)?;
    let rows = sweep(&config);
    let bytes = match format {
        TableFormat::Csv => {
            let mut buf = Vec::new();
            write_sweep_csv(&rows, &mut buf)?;
            buf
        }
        TableFormat::Json => to_json(&rows)?,
    };
    let target = common
        .out
        .as_deref()
        .or(config.base.outputs.report_path.as_deref());
    emit(target, &bytes)?;
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        eprintln!(
            "warning: {failed} of {} sweep points failed; see the error column",
            rows.len()
        );
    }
    Ok(())
}

fn cmd_export(common: &Common, format: Option<CircuitFormat>) -> Result<(), CliError> {
    let config = load_run(common)?;
    let out = run(&config)?;
    let format = format.map_or(config.outputs.circuit_format, circuit_format);
    let text =
        export_circuit(&out.circuit, format).map_err(|e| CliError::Runtime(e.to_string()))?;
    let target = common
        .out
        .as_deref()
        .or(config.outputs.circuit_path.as_deref());
    emit(target, text.as_bytes())
}

#[derive(Serialize)]
struct MpsSummary {
    n_sites: usize,
    bond_dims: Vec<usize>,
    max_bond_dim: usize,
    discarded_weight: f64,
    left_canonical: bool,
    norm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    mps: Option<mpd_core::mps::MpsDocument>,
}

fn cmd_inspect(common: &Common, chi: Option<usize>, tensors: bool) -> Result<(), CliError> {
    if chi == Some(0) {
        return Err(CliError::Usage("--chi must be >= 1".into()));
    }
    let config = load_run(common)?;
    let (_, working) = working_target(&config)?;
    let (m, discarded) =
        Mps::from_statevector_truncated(&amplitudes(&working), chi.unwrap_or(usize::MAX))
            .map_err(|e| PipelineError::new(Stage::Compress, e))?;
    let summary = MpsSummary {
        n_sites: m.n_sites(),
        bond_dims: m.bond_dims(),
        max_bond_dim: m.max_bond_dim(),
        discarded_weight: discarded,
        left_canonical: m.is_left_canonical(1e-10),
        norm: m.norm(),
        mps: tensors.then(|| m.to_document()),
    };
    emit(common.out.as_deref(), &to_json(&summary)?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { common, format } => cmd_run(common, *format),
        Command::Sweep { common, format } => cmd_sweep(common, *format),
        Command::Export { common, format } => cmd_export(common, *format),
        Command::InspectMps {
            common,
            chi,
            tensors,
        } => cmd_inspect(common, *chi, *tensors),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
