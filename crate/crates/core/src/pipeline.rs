//! End-to-end runs: sample, encode, compress, disentangle, synthesize,
//! simulate and measure.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{accounting, add_reflection_wrapper, prep_circuit, Circuit, StackMeta};
use crate::config::{Method, RunConfig, SweepConfig, Vary};
use crate::disentangler::{build_stack, DisentanglerStack, StackOptions};
use crate::dist::{amplitudes, left_half, sample_pdf, TargetDistribution};
use crate::metrics::{classical_fidelity, kl_divergence, meyer_wallach_purity, MetricsReport};
use crate::mps::Mps;

type BoxError = Box<dyn std::error::Error + Send + Sync + 'static>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Validate,
    Sample,
    Split,
    Compress,
    Disentangle,
    Synthesize,
    Simulate,
    Measure,
    Write,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Validate => "validate",
            Stage::Sample => "sample",
            Stage::Split => "split",
            Stage::Compress => "compress",
            Stage::Disentangle => "disentangle",
            Stage::Synthesize => "synthesize",
            Stage::Simulate => "simulate",
            Stage::Measure => "measure",
            Stage::Write => "write",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
#[error("{stage} stage failed: {source}")]
pub struct PipelineError {
    pub stage: Stage,
    #[source]
    pub source: BoxError,
}

impl PipelineError {
    pub fn new(stage: Stage, source: impl Into<BoxError>) -> Self {
        PipelineError {
            stage,
            source: source.into(),
        }
    }
}

trait AtStage<T> {
    fn at(self, stage: Stage) -> Result<T, PipelineError>;
}

impl<T, E: Into<BoxError>> AtStage<T> for Result<T, E> {
    fn at(self, stage: Stage) -> Result<T, PipelineError> {
        self.map_err(|e| PipelineError::new(stage, e))
    }
}

/// Everything written to a run report. Serializes deterministically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    /// Log base used by `kl_divergence`.
    pub kl_log_base: String,
    /// Layers actually built (fewer than requested with early stopping).
    pub layers_built: usize,
    pub chi_work: usize,
    pub residual_history: Vec<f64>,
    /// Seed passed on the command line, recorded for bookkeeping only; the
    /// pipeline uses no randomness.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub metrics: MetricsReport,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    pub circuit: Circuit,
    pub target: TargetDistribution,
    /// Output distribution of the prepared circuit.
    pub prepared: Vec<f64>,
    pub stack: DisentanglerStack,
}

/// The distribution the disentangler actually sees: the full target for the
/// baseline, the renormalized left half with the symmetry method.
pub fn working_target(
    config: &RunConfig,
) -> Result<(TargetDistribution, TargetDistribution), PipelineError> {
    config.validate().at(Stage::Validate)?;
    let mut target = sample_pdf(&config.dist, &config.grid()).at(Stage::Sample)?;
    if config.assume_symmetric && !target.symmetric {
        target = target.assume_symmetric().at(Stage::Sample)?;
    }
    let working = match config.method {
        Method::Symmetry => left_half(&target).at(Stage::Split)?,
        Method::Baseline => target.clone(),
    };
    Ok((target, working))
}

pub fn run(config: &RunConfig) -> Result<RunOutput, PipelineError> {
    let (target, working) = working_target(config)?;
    let mps = Mps::from_statevector(&amplitudes(&working)).at(Stage::Compress)?;
    let opts = StackOptions {
        num_layers: config.num_layers,
        chi_work: config.chi_work,
        early_stop: config.early_stop,
    };
    let stack = build_stack(&mps, opts).at(Stage::Disentangle)?;

    let symmetry = config.method == Method::Symmetry;
    let inner = prep_circuit(&stack);
    let circuit = if symmetry {
        add_reflection_wrapper(&inner).at(Stage::Synthesize)?
    } else {
        inner
    };

    let state = circuit.simulate().at(Stage::Simulate)?;
    let prepared: Vec<f64> = state.iter().map(|a| a * a).collect();

    let metrics = MetricsReport {
        kl_divergence: kl_divergence(&target.p, &prepared).at(Stage::Measure)?,
        classical_fidelity: classical_fidelity(&target.p, &prepared).at(Stage::Measure)?,
        meyer_wallach_q: meyer_wallach_purity(&state).at(Stage::Measure)?,
        target_meyer_wallach_q: meyer_wallach_purity(&amplitudes(&target)).at(Stage::Measure)?,
        truncation_error: stack.truncation_error,
        work_truncation_error: stack.work_truncation_error,
        residual_infidelity: stack.residual_infidelity,
        gate_stats: accounting(
            &circuit,
            StackMeta {
                n_qubits: config.n_qubits,
                num_layers: stack.num_layers(),
                symmetry,
            },
        ),
    };

    let report = RunReport {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        kl_log_base: "e".to_string(),
        layers_built: stack.num_layers(),
        chi_work: stack.chi_work,
        residual_history: stack.residual_history.clone(),
        seed: None,
        metrics,
    };
    Ok(RunOutput {
        report,
        circuit,
        target,
        prepared,
        stack,
    })
}

/// KL divergence between `target` and its own χ-truncated MPS, with no
/// circuit involved.
pub fn truncation_kl(target: &TargetDistribution, chi: usize) -> Result<f64, PipelineError> {
    let (m, _) = Mps::from_statevector_truncated(&amplitudes(target), chi).at(Stage::Compress)?;
    let v = m.to_statevector().at(Stage::Compress)?;
    let q: Vec<f64> = v.iter().map(|a| a * a).collect();
    kl_divergence(&target.p, &q).at(Stage::Measure)
}

/// One sweep point; failures are kept per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub varied_param: String,
    pub value: usize,
    pub chi: usize,
    pub layers: usize,
    pub n_qubits: usize,
    pub kl: Option<f64>,
    pub fidelity: Option<f64>,
    pub q_measure: Option<f64>,
    pub truncation_error: Option<f64>,
    pub residual: Option<f64>,
    pub cnot_depth_analytic: Option<usize>,
    pub error: Option<String>,
}

/// Runs every point in parallel; rows come back in the order of `vary`.
pub fn sweep(config: &SweepConfig) -> Vec<SweepRow> {
    let name = config.vary.name();
    config
        .vary
        .values()
        .par_iter()
        .map(|&value| {
            let cfg = config.run_for(value);
            let chi = match config.vary {
                Vary::BondDims(_) => value,
                _ => 1usize << cfg.num_layers.min(usize::BITS as usize - 1),
            };
            let mut row = SweepRow {
                varied_param: name.to_string(),
                value,
                chi,
                layers: cfg.num_layers,
                n_qubits: cfg.n_qubits,
                kl: None,
                fidelity: None,
                q_measure: None,
                truncation_error: None,
                residual: None,
                cnot_depth_analytic: None,
                error: None,
            };
            match run(&cfg) {
                Ok(out) => {
                    let m = out.report.metrics;
                    row.kl = Some(m.kl_divergence);
                    row.fidelity = Some(m.classical_fidelity);
                    row.q_measure = Some(m.meyer_wallach_q);
                    row.truncation_error = Some(m.truncation_error);
                    row.residual = Some(m.residual_infidelity);
                    row.cnot_depth_analytic = Some(m.gate_stats.cnot_depth_analytic);
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            row
        })
        .collect()
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<(), PipelineError> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).at(Stage::Write)?;
    }
    w.flush().at(Stage::Write)
}

/// Single-row CSV rendering of a run report.
pub fn write_report_csv<W: Write>(report: &RunReport, out: W) -> Result<(), PipelineError> {
    let m = &report.metrics;
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "n_qubits",
        "method",
        "layers",
        "kl",
        "fidelity",
        "q_measure",
        "target_q_measure",
        "truncation_error",
        "residual",
        "cnot_depth_analytic",
        "cnot_count_analytic",
        "two_qubit_gate_count",
    ])
    .at(Stage::Write)?;
    let method = match report.config.method {
        Method::Symmetry => "symmetry",
        Method::Baseline => "baseline",
    };
    w.write_record([
        report.config.n_qubits.to_string(),
        method.to_string(),
        report.layers_built.to_string(),
        m.kl_divergence.to_string(),
        m.classical_fidelity.to_string(),
        m.meyer_wallach_q.to_string(),
        m.target_meyer_wallach_q.to_string(),
        m.truncation_error.to_string(),
        m.residual_infidelity.to_string(),
        m.gate_stats.cnot_depth_analytic.to_string(),
        m.gate_stats.cnot_count_analytic.to_string(),
        m.gate_stats.two_qubit_gate_count.to_string(),
    ])
    .at(Stage::Write)?;
    w.flush().at(Stage::Write)
}
