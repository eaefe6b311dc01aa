//! Amplitude encoding of discretized probability densities with matrix
//! product disentanglers, optionally exploiting reflection symmetry.
//!
//! The flow is [`dist`] (grid + target) → [`mps`] (compression) →
//! [`disentangler`] (layer extraction) → [`circuit`] (synthesis, simulation,
//! accounting) → [`metrics`]. [`pipeline`] chains them for a [`config`].

pub mod circuit;
pub mod config;
pub mod disentangler;
pub mod dist;
pub mod metrics;
pub mod mps;
pub mod numerics;
pub mod pipeline;

pub use circuit::{Circuit, CircuitError, GateOp, GateStats};
pub use config::{Config, ConfigError, Method, RunConfig, SweepConfig};
pub use disentangler::{build_stack, DisentanglerStack, MpdLayer, StackOptions};
pub use dist::{DistSpec, Grid, GridConvention, TargetDistribution};
pub use metrics::MetricsReport;
pub use mps::Mps;
pub use numerics::Matrix;
pub use pipeline::{run, sweep, PipelineError, RunOutput, RunReport};
