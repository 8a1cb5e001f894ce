//! Metric and connection distortion of the barycentric map under refinement.
//!
//! Every element of the level is probed at the barycentre and the three
//! nodes of the symmetric degree-2 rule; the row value is the maximum over
//! all probes.  The relative metric defect should decay like `h²` and the
//! connection defect like `h`.

use karcher_core::fem;
use karcher_core::karcher::{FD_STEP, FD_STEP_SECOND};
use karcher_core::manifold::ManifoldKind;
use karcher_core::quadrature;
use rayon::prelude::*;

use super::{per_level, slope_of, solver, within, LevelInfo};
use crate::config::ExperimentConfig;
use crate::families::{self, SurfaceLevel};
use crate::report::{Report, Row};
use crate::{Context, HarnessError};

pub const METRIC: &str = "metric_defect";
pub const CONNECTION: &str = "connection_defect";

pub fn family_name(kind: ManifoldKind) -> &'static str {
    match kind {
        ManifoldKind::Hyperbolic => "h2_triangle",
        _ => "s2_icosphere",
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<Report, HarnessError> {
    let kind = cfg.manifold_or(
        ManifoldKind::Sphere,
        &[ManifoldKind::Sphere, ManifoldKind::Hyperbolic],
    )?;
    let family = family_name(kind);
    let rows = per_level(cfg.depths_or(1, 5), |d| {
        let level = match kind {
            ManifoldKind::Hyperbolic => families::hyperbolic_triangle(d)?,
            _ => families::icosphere(d)?,
        };
        measure(family, &level, cfg)
    })?;
    let mut report = Report {
        rows: rows.into_iter().flatten().collect(),
        ..Report::default()
    };
    slope_of(&mut report, family, METRIC, Some(within(2.0, 0.3)))?;
    slope_of(&mut report, family, CONNECTION, Some(within(1.0, 0.3)))?;
    Ok(report)
}

fn measure(
    family: &str,
    level: &SurfaceLevel,
    cfg: &ExperimentConfig,
) -> Result<Vec<Row>, HarnessError> {
    let solver = solver(cfg);
    let maps = fem::karcher_maps(&level.complex, &level.points, solver)
        .context("building element maps")?;
    let mut probes = quadrature::degree_two(2).nodes;
    probes.push(vec![1.0 / 3.0; 3]);
    let worst = maps
        .par_iter()
        .map(|map| {
            probes.iter().try_fold((0.0f64, 0.0f64), |(m, c), lambda| {
                let s = map.distortion_sample(lambda, FD_STEP, FD_STEP_SECOND)?;
                Ok((m.max(s.metric_defect), c.max(s.connection_defect)))
            })
        })
        .collect::<Result<Vec<_>, karcher_core::karcher::KarcherError>>()
        .context("sampling distortion")?;
    let (metric, connection) = worst
        .iter()
        .fold((0.0f64, 0.0f64), |(m, c), (a, b)| (m.max(*a), c.max(*b)));
    let info = LevelInfo {
        family,
        level: level.depth,
        h: level.h(),
        theta_min: level.theta_min(),
        iterations: families::max_iterations(level, solver)?,
    };
    Ok(vec![
        info.row(METRIC, metric),
        info.row(CONNECTION, connection),
    ])
}
