//! The experiments behind the CLI, one module each.

pub mod counterexample;
pub mod curvature;
pub mod delaunay;
pub mod distortion;
pub mod heatflow;
pub mod hodge;
pub mod interpolation;
pub mod poisson;

use karcher_core::karcher::SolverParams;
use rayon::prelude::*;

use crate::config::{Depths, ExperimentConfig};
use crate::report::{Criterion, Report, Row};
use crate::{fit_slope, HarnessError};

pub(crate) fn solver(cfg: &ExperimentConfig) -> SolverParams {
    SolverParams {
        tol: cfg.tol,
        max_iter: 500,
    }
}

/// Runs `f` on every depth concurrently; results come back in depth order.
pub(crate) fn per_level<T, F>(depths: Depths, f: F) -> Result<Vec<T>, HarnessError>
where
    T: Send,
    F: Fn(usize) -> Result<T, HarnessError> + Sync + Send,
{
    depths.levels().into_par_iter().map(f).collect()
}

/// Level metadata shared by all rows of one level.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LevelInfo<'a> {
    pub family: &'a str,
    pub level: usize,
    pub h: f64,
    pub theta_min: f64,
    pub iterations: usize,
}

impl LevelInfo<'_> {
    pub fn row(&self, quantity: &str, value: f64) -> Row {
        Row {
            family: self.family.to_string(),
            quantity: quantity.to_string(),
            level: self.level,
            h: self.h,
            theta_min: self.theta_min,
            iterations: self.iterations,
            value,
        }
    }
}

/// Fits the slope of a quantity's rows and records it with its criterion.
pub(crate) fn slope_of(
    report: &mut Report,
    family: &str,
    quantity: &str,
    criterion: Option<Criterion>,
) -> Result<f64, HarnessError> {
    let s = fit_slope(&report.series(family, quantity))?;
    report.slope(family, quantity, s, criterion);
    Ok(s)
}

/// `Within { target, tol }` shorthand.
pub(crate) fn within(target: f64, tol: f64) -> Criterion {
    Criterion::Within { target, tol }
}
