//! Implicit Euler heat flow on the icosphere family under the two metric
//! assemblies.
//!
//! Starting from `u₀ = z + 3z² − 1` with `f = 0`, both systems take
//! [`STEPS`] steps of size [`TAU`] to `t = 0.1`; the row value is the L²
//! distance of the two final states.  The edge-length flow is also checked
//! for mean conservation and monotone energy decay.

use karcher_core::fem::{self, HeatTrajectory};
use karcher_core::linalg;
use karcher_core::manifold::ManifoldKind;
use nalgebra::DVector;

use super::{per_level, slope_of, solver, within, LevelInfo};
use crate::config::ExperimentConfig;
use crate::families;
use crate::report::{Criterion, Report, Row};
use crate::{Context, HarnessError};

pub const FAMILY: &str = "s2_icosphere";
pub const GAP: &str = "l2_gap";
pub const MEAN_DRIFT: &str = "mean_drift";
pub const ENERGY_INCREASE: &str = "energy_increase";

pub const TAU: f64 = 0.01;
pub const STEPS: usize = 10;

pub fn run(cfg: &ExperimentConfig) -> Result<Report, HarnessError> {
    cfg.manifold_or(ManifoldKind::Sphere, &[ManifoldKind::Sphere])?;
    let rows = per_level(cfg.depths_or(1, 5), |d| level(d, cfg))?;
    let mut report = Report {
        rows: rows.into_iter().flatten().collect(),
        ..Report::default()
    };
    slope_of(&mut report, FAMILY, GAP, Some(within(2.0, 0.5)))?;
    let worst = |q: &str| {
        report
            .rows
            .iter()
            .filter(|r| r.quantity == q)
            .map(|r| r.value)
            .fold(0.0, f64::max)
    };
    let (drift, increase) = (worst(MEAN_DRIFT), worst(ENERGY_INCREASE));
    report.check(FAMILY, MEAN_DRIFT, drift, Criterion::AtMost(1e-12));
    report.check(FAMILY, ENERGY_INCREASE, increase, Criterion::AtMost(1e-12));
    Ok(report)
}

/// Largest change of the mass-weighted mean over the steps, relative to the
/// initial mean magnitude plus one.
fn mean_drift(sys: &fem::P1System, t: &HeatTrajectory) -> f64 {
    let w = linalg::row_sums(&sys.mass);
    let mean = |u: &DVector<f64>| w.dot(u) / w.sum();
    let m0 = mean(&t.states[0]);
    t.states
        .iter()
        .map(|u| (mean(u) - m0).abs())
        .fold(0.0, f64::max)
        / (1.0 + m0.abs())
}

/// Largest energy increase between consecutive steps.
fn energy_increase(t: &HeatTrajectory) -> f64 {
    t.energies
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0, f64::max)
}

fn level(depth: usize, cfg: &ExperimentConfig) -> Result<Vec<Row>, HarnessError> {
    let solver = solver(cfg);
    let level = families::icosphere(depth)?;
    let c = &level.complex;
    let edge = fem::assemble(c, &level.metric).context("assembling from edge lengths")?;
    let pullback = fem::assemble_pullback(c, &level.points, solver)
        .context("assembling from the pullback metric")?;
    let u0 = DVector::from_iterator(
        c.count(0),
        level.points.iter().map(|p| {
            let z = p.coords()[2];
            z + 3.0 * z * z - 1.0
        }),
    );
    let f = DVector::zeros(c.count(0));
    let a = fem::heat_flow(&edge, &u0, &f, TAU, STEPS).context("flowing under edge lengths")?;
    let b = fem::heat_flow(&pullback, &u0, &f, TAU, STEPS)
        .context("flowing under the pullback metric")?;
    let diff = a.states.last().expect("nonempty") - b.states.last().expect("nonempty");
    let info = LevelInfo {
        family: FAMILY,
        level: depth,
        h: level.h(),
        theta_min: level.theta_min(),
        iterations: families::max_iterations(&level, solver)?,
    };
    Ok(vec![
        info.row(GAP, fem::quadratic_norm(&edge.mass, &diff)),
        info.row(MEAN_DRIFT, mean_drift(&edge, &a)),
        info.row(ENERGY_INCREASE, energy_increase(&a)),
    ])
}
