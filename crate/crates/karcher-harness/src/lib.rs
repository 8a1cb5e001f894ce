//! Reproducible convergence experiments over `karcher-core`.
//!
//! [`run`] dispatches an [`ExperimentConfig`] to one experiment, which
//! returns a [`Report`] of per-level rows, fitted slopes and threshold
//! checks.  Refinement levels are computed concurrently and collected in
//! level order, so the CSV is byte-identical across runs and thread counts.

pub mod config;
pub mod experiments;
pub mod families;
pub mod report;
pub mod slope;

use std::error::Error as StdError;

use thiserror::Error;

pub use config::{ConfigError, Depths, Experiment, ExperimentConfig, Preset, Settings};
pub use report::{Criterion, Report, Row, Summary};
pub use slope::{fit_slope, SlopeError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Slope(#[from] SlopeError),
    #[error("{context}: {source}")]
    Upstream {
        context: String,
        #[source]
        source: Box<dyn StdError + Send + Sync>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Attaches a description of the failing step to an upstream error.
pub trait Context<T> {
    fn context(self, context: &str) -> Result<T, HarnessError>;
}

impl<T, E: StdError + Send + Sync + 'static> Context<T> for Result<T, E> {
    fn context(self, context: &str) -> Result<T, HarnessError> {
        self.map_err(|e| HarnessError::Upstream {
            context: context.to_string(),
            source: Box::new(e),
        })
    }
}

/// Runs the configured experiment.
pub fn run(cfg: &ExperimentConfig) -> Result<Report, HarnessError> {
    use experiments::*;
    match cfg.experiment {
        Experiment::Distortion => distortion::run(cfg),
        Experiment::Interpolation => interpolation::run(cfg),
        Experiment::Poisson => poisson::run(cfg),
        Experiment::DecCounterexample => counterexample::run(cfg),
        Experiment::Heatflow => heatflow::run(cfg),
        Experiment::MeanCurvature => curvature::run(cfg),
        Experiment::Delaunay => delaunay::run(cfg),
        Experiment::Hodge => hodge::run(cfg),
    }
}

/// Renders a report as CSV text with the config echo.
pub fn to_csv(cfg: &ExperimentConfig, report: &Report) -> String {
    let mut buf = Vec::new();
    report
        .write_csv(&mut buf, &cfg.echo())
        .expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("the CSV is ASCII")
}
