//! Experiment harness for the splitting laboratory: configuration parsing,
//! scenario and sweep execution, CSV persistence, SVG figures, and the
//! linear-theory verification report.
//!
//! The `splitlab` binary is a thin wrapper over this library so everything
//! here is testable in-process.

pub mod config;
pub mod figures;
pub mod linear_report;
pub mod runner;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error("scenario {key}: {source}")]
    Simulation {
        key: String,
        source: splitlab_core::splitting::SplittingError,
    },
    #[error("reference for {key}: {source}")]
    Reference {
        key: String,
        source: splitlab_core::mechanism::MechanismError,
    },
    #[error("metrics for {key}: {source}")]
    Metrics {
        key: String,
        source: splitlab_core::metrics::MetricsError,
    },
    #[error("figure input: {0}")]
    Figure(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Full round-trip float formatting (17 significant digits) used by every
/// numeric CSV column so outputs are bit-stable across runs on one platform.
pub fn fmt_full(x: f64) -> String {
    format!("{x:.16e}")
}
