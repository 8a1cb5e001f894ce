//! Karcher–Delaunay triangulations of symmetric vertex sets on the unit
//! sphere.
//!
//! - `octahedron`: the six axis points give the octahedral complex, every
//!   edge a quarter great circle.
//! - `tetrahedron`: the four vertices of a regular tetrahedron give the
//!   boundary of a tetrahedron.
//! - `antipodal`: two antipodal points have no Voronoi vertex and must be
//!   rejected as non-generic.
//!
//! Every preset contributes one row per count (vertices, edges, triangles,
//! Euler characteristic) and its checks; `--preset` restricts the run to one.

use std::f64::consts::FRAC_PI_2;

use karcher_core::complex::{Complex, DiscreteMetric};
use karcher_core::karcher::{self, DelaunayOptions, KarcherError};
use karcher_core::manifold::{ManifoldKind, ManifoldPoint, ManifoldTag};
use karcher_core::meshes;

use super::{within, LevelInfo};
use crate::config::{ExperimentConfig, Preset};
use crate::families::theta_min;
use crate::report::{Criterion, Report};
use crate::{Context, HarnessError};

pub const VERTICES: &str = "vertices";
pub const EDGES: &str = "edges";
pub const TRIANGLES: &str = "triangles";
pub const EULER: &str = "euler_characteristic";
pub const EDGE_DEVIATION: &str = "max_edge_deviation";
pub const NON_GENERIC: &str = "non_generic_error";

pub fn run(cfg: &ExperimentConfig) -> Result<Report, HarnessError> {
    cfg.manifold_or(ManifoldKind::Sphere, &[ManifoldKind::Sphere])?;
    let presets = cfg.preset.map_or(Preset::ALL.to_vec(), |p| vec![p]);
    let mut report = Report::default();
    for preset in presets {
        report.extend(match preset {
            Preset::Octahedron => octahedron()?,
            Preset::Tetrahedron => tetrahedron()?,
            Preset::Antipodal => antipodal()?,
        });
    }
    Ok(report)
}

fn sphere_points(raw: &[Vec<f64>]) -> Result<Vec<ManifoldPoint>, HarnessError> {
    let tag = ManifoldTag::sphere(2);
    raw.iter()
        .map(|p| tag.point(p.clone()))
        .collect::<Result<_, _>>()
        .context("placing the vertices")
}

fn triangulate(
    raw: &[Vec<f64>],
) -> Result<Result<(Complex, DiscreteMetric), KarcherError>, HarnessError> {
    let pts = sphere_points(raw)?;
    Ok(karcher::delaunay(
        &ManifoldTag::sphere(2),
        &pts,
        DelaunayOptions::default(),
    ))
}

/// Count rows and exact count checks for one triangulated preset.
fn summary(family: &str, c: &Complex, m: &DiscreteMetric, expected: [usize; 3]) -> Report {
    let info = LevelInfo {
        family,
        level: 0,
        h: m.mesh_size(),
        theta_min: theta_min(c, m),
        iterations: 0,
    };
    let mut report = Report::default();
    let counts = c.counts();
    for (k, q) in [VERTICES, EDGES, TRIANGLES].into_iter().enumerate() {
        let n = counts.get(k).copied().unwrap_or(0) as f64;
        report.rows.push(info.row(q, n));
        report.check(family, q, n, within(expected[k] as f64, 0.0));
    }
    let euler = c.euler_characteristic() as f64;
    report.rows.push(info.row(EULER, euler));
    report.check(family, EULER, euler, within(2.0, 0.0));
    report
}

fn octahedron() -> Result<Report, HarnessError> {
    let family = Preset::Octahedron.name();
    let (c, m) = triangulate(&meshes::octahedron().coords)?
        .context("triangulating the octahedron vertices")?;
    let mut report = summary(family, &c, &m, [6, 12, 8]);
    let deviation = m
        .lengths()
        .iter()
        .map(|l| (l - FRAC_PI_2).abs())
        .fold(0.0, f64::max);
    report.check(family, EDGE_DEVIATION, deviation, Criterion::AtMost(1e-9));
    Ok(report)
}

fn tetrahedron() -> Result<Report, HarnessError> {
    let (c, m) = triangulate(&meshes::tetrahedron_points())?
        .context("triangulating the tetrahedron vertices")?;
    Ok(summary(Preset::Tetrahedron.name(), &c, &m, [4, 6, 4]))
}

/// Records `1` when the triangulation is refused as non-generic and `0` when
/// it succeeds or fails for another reason.
fn antipodal() -> Result<Report, HarnessError> {
    let raw = vec![vec![0.0, 0.0, 1.0], vec![0.0, 0.0, -1.0]];
    let refused = matches!(triangulate(&raw)?, Err(KarcherError::NonGeneric(_)));
    let mut report = Report::default();
    report.check(
        Preset::Antipodal.name(),
        NON_GENERIC,
        if refused { 1.0 } else { 0.0 },
        within(1.0, 0.0),
    );
    Ok(report)
}
