//! Discrete mean curvature and the area differential of Karcher simplices.
//!
//! - `r3_icosphere`: the icosphere family embedded in ℝ³ with chordal edge
//!   lengths; the L² mean curvature `M⁻¹ H_{ℓ²}` should approach `2ν` with
//!   `ν` the inward normal.  Rows hold the worst relative norm error over
//!   all vertices and over the valence-6 vertices, the relative L² error and
//!   the worst angle to `ν` in degrees; the deepest level is checked vertex
//!   by vertex.  The twelve valence-5 vertices inherited from the
//!   icosahedron keep a norm error of about a third at every depth: the
//!   area gradient there does not converge pointwise, only in L².
//! - `r3_plane`: a planar grid in the plane `z = 0` of ℝ³, whose L² mean
//!   curvature must vanish.
//! - `s2_triangle` / `r2_triangle`: one triangle of fixed shape scaled by
//!   `2^{-depth}` on the sphere and in the plane; the finite-difference
//!   differential of the Karcher area is compared with the edge-length
//!   formula for every vertex and two orthonormal directions.  On the sphere
//!   the gap relative to `|s|` decays at first order; in the plane it
//!   vanishes.

use karcher_core::fem::{self, FemError};
use karcher_core::karcher::SolverParams;
use karcher_core::manifold::{ManifoldKind, ManifoldPoint, ManifoldTag};
use karcher_core::meshes::{self, Mesh};
use nalgebra::{DVector, Vector3};

use super::{per_level, slope_of, solver, LevelInfo};
use crate::config::ExperimentConfig;
use crate::families::SurfaceLevel;
use crate::report::{Criterion, Report, Row};
use crate::{Context, HarnessError};

pub const SPHERE: &str = "r3_icosphere";
pub const PLANE: &str = "r3_plane";
pub const CURVED_TRIANGLE: &str = "s2_triangle";
pub const FLAT_TRIANGLE: &str = "r2_triangle";
pub const NORM_ERROR: &str = "norm_error";
pub const REGULAR_NORM_ERROR: &str = "norm_error_valence6";
pub const L2_ERROR: &str = "l2_relative_error";
pub const ANGLE: &str = "angle_deg";
pub const SUM: &str = "hl2_sum";
pub const PLANE_NORM: &str = "max_norm";
pub const RELATIVE_GAP: &str = "relative_gap";
pub const GAP: &str = "gap";

/// Step of the vertex motion relative to the triangle's size.
const AREA_STEP: f64 = 1e-3;
const AREA_QUAD_DEGREE: usize = 4;

pub fn run(cfg: &ExperimentConfig) -> Result<Report, HarnessError> {
    cfg.manifold_or(ManifoldKind::Euclidean, &[ManifoldKind::Euclidean])?;
    let depths = cfg.depths_or(1, 4);
    let rows = per_level(depths, |d| {
        let mut rows = sphere_level(d)?;
        rows.extend(area_level(d, solver(cfg))?);
        Ok(rows)
    })?;
    let mut report = Report {
        rows: rows.into_iter().flatten().collect(),
        ..Report::default()
    };
    let deepest = |q: &str| {
        report
            .rows
            .iter()
            .filter(|r| r.family == SPHERE && r.quantity == q && r.level == depths.last)
            .map(|r| r.value)
            .next()
            .unwrap_or(f64::NAN)
    };
    let (norm, angle, sum) = (deepest(NORM_ERROR), deepest(ANGLE), deepest(SUM));
    report.check(SPHERE, NORM_ERROR, norm, Criterion::AtMost(0.1));
    report.check(SPHERE, ANGLE, angle, Criterion::AtMost(5.0));
    report.check(SPHERE, SUM, sum, Criterion::AtMost(1e-9));
    report.check(PLANE, PLANE_NORM, plane()?, Criterion::AtMost(1e-10));
    slope_of(
        &mut report,
        CURVED_TRIANGLE,
        RELATIVE_GAP,
        Some(Criterion::AtLeast(0.7)),
    )?;
    let flat = report
        .series(FLAT_TRIANGLE, GAP)
        .iter()
        .map(|r| r.1)
        .fold(0.0, f64::max);
    report.check(FLAT_TRIANGLE, GAP, flat, Criterion::AtMost(1e-6));
    Ok(report)
}

fn l2_curvature(level: &SurfaceLevel) -> Result<(Vec<Vec<f64>>, fem::P1System), HarnessError> {
    let c = &level.complex;
    let hl2 = fem::mean_curvature_vertex(c, &level.metric, &level.tag, &level.points)
        .context("area gradients")?;
    let sys = fem::assemble(c, &level.metric).context("assembling")?;
    let h = fem::mean_curvature_l2(c, &sys, &hl2).context("mass solve")?;
    Ok((h, sys))
}

fn sphere_level(depth: usize) -> Result<Vec<Row>, HarnessError> {
    let level = SurfaceLevel::new(depth, ManifoldTag::euclidean(3), &meshes::icosphere(depth))?;
    let c = &level.complex;
    let hl2 = fem::mean_curvature_vertex(c, &level.metric, &level.tag, &level.points)
        .context("area gradients")?;
    let sum = (0..3)
        .map(|k| hl2.iter().map(|h| h[k]).sum::<f64>().abs())
        .fold(0.0, f64::max);
    let (h, sys) = l2_curvature(&level)?;
    let mut valence = vec![0usize; c.count(0)];
    for e in c.simplices(1) {
        valence[e[0]] += 1;
        valence[e[1]] += 1;
    }
    let mut norm_error = 0.0f64;
    let mut regular_error = 0.0f64;
    let mut angle = 0.0f64;
    let mut err = vec![DVector::zeros(c.count(0)); 3];
    let mut target = vec![DVector::zeros(c.count(0)); 3];
    for (v, (hv, p)) in h.iter().zip(&level.points).enumerate() {
        let hv = Vector3::from_column_slice(hv);
        let inward = -Vector3::from_column_slice(p.coords()).normalize();
        let e = (hv.norm() - 2.0).abs() / 2.0;
        norm_error = norm_error.max(e);
        if valence[v] == 6 {
            regular_error = regular_error.max(e);
        }
        angle = angle.max(hv.angle(&inward).to_degrees());
        for k in 0..3 {
            err[k][v] = hv[k] - 2.0 * inward[k];
            target[k][v] = 2.0 * inward[k];
        }
    }
    let mass_norm = |f: &[DVector<f64>]| {
        f.iter()
            .map(|x| fem::quadratic_norm(&sys.mass, x).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let info = LevelInfo {
        family: SPHERE,
        level: depth,
        h: level.h(),
        theta_min: level.theta_min(),
        iterations: 0,
    };
    Ok(vec![
        info.row(NORM_ERROR, norm_error),
        info.row(REGULAR_NORM_ERROR, regular_error),
        info.row(L2_ERROR, mass_norm(&err) / mass_norm(&target)),
        info.row(ANGLE, angle),
        info.row(SUM, sum),
    ])
}

/// Largest L² mean curvature on a planar grid in ℝ³.
fn plane() -> Result<f64, HarnessError> {
    let grid = meshes::square_grid(8);
    let mesh = Mesh {
        elements: grid.elements,
        coords: grid.coords.iter().map(|p| vec![p[0], p[1], 0.0]).collect(),
    };
    let level = SurfaceLevel::new(0, ManifoldTag::euclidean(3), &mesh)?;
    Ok(l2_curvature(&level)?
        .0
        .iter()
        .flatten()
        .fold(0.0f64, |m, x| m.max(x.abs())))
}

/// Tangent-plane shape of the area-differential triangle before scaling.
const SHAPE: [[f64; 2]; 3] = [[-0.45, -0.3], [0.55, -0.3], [-0.05, 0.55]];

fn scaled_shape(depth: usize) -> Vec<[f64; 2]> {
    let s = 0.6 * 0.5f64.powi(depth as i32);
    SHAPE.iter().map(|p| [s * p[0], s * p[1]]).collect()
}

/// The triangle on the sphere: tangent-plane shape at the north pole pushed
/// through the exponential map.
fn sphere_triangle(depth: usize) -> Result<Vec<ManifoldPoint>, HarnessError> {
    let tag = ManifoldTag::sphere(2);
    let pole = [0.0, 0.0, 1.0];
    scaled_shape(depth)
        .iter()
        .map(|p| tag.project(tag.exp_raw(&pole, &[p[0], p[1], 0.0])))
        .collect::<Result<_, _>>()
        .context("placing the triangle")
}

fn plane_triangle(depth: usize) -> Result<Vec<ManifoldPoint>, HarnessError> {
    let tag = ManifoldTag::euclidean(2);
    scaled_shape(depth)
        .iter()
        .map(|p| tag.point(p.to_vec()))
        .collect::<Result<_, _>>()
        .context("placing the triangle")
}

/// Two orthonormal tangent directions at `p`.
fn tangent_frame(tag: &ManifoldTag, p: &ManifoldPoint) -> Result<Vec<Vec<f64>>, HarnessError> {
    let dim = tag.ambient_dim();
    let mut frame: Vec<Vec<f64>> = Vec::new();
    for axis in 0..dim {
        if frame.len() == tag.intrinsic_dim() {
            break;
        }
        let mut e = vec![0.0; dim];
        e[axis] = 1.0;
        let mut v = tag
            .project_tangent(p, e)
            .context("projecting")?
            .vec()
            .to_vec();
        for f in &frame {
            let d = tag.inner(&v, f);
            v.iter_mut().zip(f).for_each(|(a, b)| *a -= d * b);
        }
        let n = tag.norm(&v);
        if n > 1e-6 {
            frame.push(v.iter().map(|x| x / n).collect());
        }
    }
    Ok(frame)
}

/// Worst gap over vertices and directions: `(gap, gap/|s|, h)`.
fn worst_gap(
    points: &[ManifoldPoint],
    solver: SolverParams,
) -> Result<(f64, f64, f64), HarnessError> {
    let tag = points[0].tag();
    let h = (0..3)
        .flat_map(|a| (a + 1..3).map(move |b| (a, b)))
        .map(|(a, b)| tag.dist_raw(points[a].coords(), points[b].coords()))
        .fold(0.0, f64::max);
    let mut gap = 0.0f64;
    let mut relative = 0.0f64;
    for i in 0..points.len() {
        for w in tangent_frame(&tag, &points[i])? {
            let r = fem::area_differential_check(
                points,
                i,
                &w,
                AREA_STEP * h,
                solver,
                AREA_QUAD_DEGREE,
            )
            .map_err(|e: FemError| e)
            .context("differentiating the area")?;
            gap = gap.max(r.gap);
            relative = relative.max(r.gap / r.volume);
        }
    }
    Ok((gap, relative, h))
}

fn area_level(depth: usize, solver: SolverParams) -> Result<Vec<Row>, HarnessError> {
    let curved = sphere_triangle(depth)?;
    let (_, relative, h) = worst_gap(&curved, solver)?;
    let theta = |pts: &[ManifoldPoint]| -> Result<f64, HarnessError> {
        let map = karcher_core::karcher::BarycentricMap::new(pts.to_vec(), solver)
            .context("building the map")?;
        let l = map.edge_lengths();
        Ok(karcher_core::simplex::fullness(l, l.diameter()))
    };
    let iterations = karcher_core::karcher::karcher_mean(&curved, &[1.0 / 3.0; 3], solver)
        .context("solving the barycentre")?
        .iterations;
    let curved_info = LevelInfo {
        family: CURVED_TRIANGLE,
        level: depth,
        h,
        theta_min: theta(&curved)?,
        iterations,
    };
    let flat = plane_triangle(depth)?;
    let (gap, _, h) = worst_gap(&flat, solver)?;
    let flat_info = LevelInfo {
        family: FLAT_TRIANGLE,
        level: depth,
        h,
        theta_min: theta(&flat)?,
        iterations: 0,
    };
    Ok(vec![
        curved_info.row(RELATIVE_GAP, relative),
        flat_info.row(GAP, gap),
    ])
}
