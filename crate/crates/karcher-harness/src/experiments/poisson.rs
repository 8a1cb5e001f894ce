//! P1 Poisson convergence on the flat square and on the sphere, and the
//! solution gap between pullback-metric and edge-length assemblies.
//!
//! - `flat_square`: `−Δu = 2π² sin πx sin πy` with zero boundary values;
//!   L² and H¹ errors against the exact solution by quadrature.
//! - `s2_icosphere`: `−Δu = Y₂` with `Y₂ = 3z² − 1` and exact solution
//!   `u = Y₂/6`, solved in the mean-zero space with the load integrated over
//!   the Karcher simplices.  The discrete load is recentred to mean zero
//!   before solving since the Karcher triangulation integrates `Y₂` only
//!   approximately to zero.
//! - `s2_metric_gap`: the same problem assembled once from the quadrature
//!   sampled pullback metric and once from edge lengths; the row value is the
//!   L² norm of the difference of the two solutions.

use std::f64::consts::PI;

use karcher_core::dec::BoundaryCondition;
use karcher_core::fem::{self, FemError, P1System, Rhs};
use karcher_core::karcher::SolverParams;
use karcher_core::linalg;
use karcher_core::manifold::ManifoldKind;
use karcher_core::quadrature::{self, Rule};
use nalgebra::{DVector, Matrix2, Vector2};
use rayon::prelude::*;

use super::{per_level, slope_of, solver, within, LevelInfo};
use crate::config::ExperimentConfig;
use crate::families::{self, SurfaceLevel};
use crate::report::{Report, Row};
use crate::{Context, HarnessError};

pub const FLAT: &str = "flat_square";
pub const SPHERE: &str = "s2_icosphere";
pub const GAP: &str = "s2_metric_gap";
pub const L2: &str = "l2_error";
pub const H1: &str = "h1_error";
pub const GAP_L2: &str = "l2_gap";
pub const ORDER_GAP: &str = "l2_minus_h1_slope";

const LOAD_DEGREE: usize = 4;
const ERROR_DEGREE: usize = 6;

pub fn run(cfg: &ExperimentConfig) -> Result<Report, HarnessError> {
    let kind = cfg.manifold_or(
        ManifoldKind::Euclidean,
        &[ManifoldKind::Euclidean, ManifoldKind::Sphere],
    )?;
    match kind {
        ManifoldKind::Sphere => sphere(cfg),
        _ => flat(cfg),
    }
}

fn flat(cfg: &ExperimentConfig) -> Result<Report, HarnessError> {
    let rows = per_level(cfg.depths_or(1, 5), flat_level)?;
    let mut report = Report {
        rows: rows.into_iter().flatten().collect(),
        ..Report::default()
    };
    let l2 = slope_of(&mut report, FLAT, L2, Some(within(2.0, 0.2)))?;
    let h1 = slope_of(&mut report, FLAT, H1, Some(within(1.0, 0.2)))?;
    report.check(FLAT, ORDER_GAP, l2 - h1, within(1.0, 0.3));
    Ok(report)
}

fn exact(p: &[f64]) -> f64 {
    (PI * p[0]).sin() * (PI * p[1]).sin()
}

fn exact_gradient(p: &[f64]) -> Vector2<f64> {
    Vector2::new(
        PI * (PI * p[0]).cos() * (PI * p[1]).sin(),
        PI * (PI * p[0]).sin() * (PI * p[1]).cos(),
    )
}

fn affine(coords: &[&[f64]], lambda: &[f64]) -> Vec<f64> {
    (0..2)
        .map(|k| coords.iter().zip(lambda).map(|(p, l)| l * p[k]).sum())
        .collect()
}

fn flat_level(depth: usize) -> Result<Vec<Row>, HarnessError> {
    let level = families::unit_square(depth)?;
    let c = &level.complex;
    let sys = fem::assemble(c, &level.metric).context("assembling")?;
    let rule = quadrature::grundmann_moller(2, LOAD_DEGREE);
    let load = fem::load_vector(c, &sys, &rule, |e, lambda| {
        Ok::<_, FemError>(2.0 * PI * PI * exact(&affine(&level.element_coords(e), lambda)))
    })
    .context("integrating the load")?;
    let boundary = c.boundary_vertices();
    let fixed: Vec<(usize, f64)> = (0..c.count(0))
        .filter(|&v| boundary[v])
        .map(|v| (v, 0.0))
        .collect();
    let uh = fem::poisson_p1(&sys, &Rhs::Load(load), &BoundaryCondition::Dirichlet(fixed))
        .context("solving")?;

    let rule = quadrature::grundmann_moller(2, ERROR_DEGREE);
    let (l2, h1) = (0..c.count(2))
        .map(|e| {
            let key = &c.simplices(2)[e];
            let p = level.element_coords(e);
            let u: Vec<f64> = key.iter().map(|&v| uh[v]).collect();
            let jac = Matrix2::new(
                p[1][0] - p[0][0],
                p[2][0] - p[0][0],
                p[1][1] - p[0][1],
                p[2][1] - p[0][1],
            );
            let grad = jac
                .transpose()
                .try_inverse()
                .expect("nondegenerate element")
                * Vector2::new(u[1] - u[0], u[2] - u[0]);
            let mut l2 = 0.0;
            let mut h1 = 0.0;
            for (node, w) in rule.nodes.iter().zip(&rule.weights) {
                let x = affine(&p, node);
                let uh: f64 = node.iter().zip(&u).map(|(l, v)| l * v).sum();
                l2 += w * (exact(&x) - uh).powi(2);
                h1 += w * (exact_gradient(&x) - grad).norm_squared();
            }
            (sys.volumes[e] * l2, sys.volumes[e] * h1)
        })
        .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let info = LevelInfo {
        family: FLAT,
        level: depth,
        h: level.h(),
        theta_min: level.theta_min(),
        iterations: 0,
    };
    Ok(vec![info.row(L2, l2.sqrt()), info.row(H1, h1.sqrt())])
}

fn y2(p: &[f64]) -> f64 {
    3.0 * p[2] * p[2] - 1.0
}

/// `b − (Σb / Σw)·w` with `w` the mass row sums: the load of the mean-zero
/// part of the data.
fn recentre(sys: &P1System, b: DVector<f64>) -> DVector<f64> {
    let w = linalg::row_sums(&sys.mass);
    let shift = b.sum() / w.sum();
    b - w * shift
}

fn sphere(cfg: &ExperimentConfig) -> Result<Report, HarnessError> {
    let rows = per_level(cfg.depths_or(1, 5), |d| sphere_level(d, solver(cfg)))?;
    let mut report = Report {
        rows: rows.into_iter().flatten().collect(),
        ..Report::default()
    };
    slope_of(&mut report, SPHERE, L2, Some(within(2.0, 0.3)))?;
    slope_of(&mut report, GAP, GAP_L2, Some(within(2.0, 0.5)))?;
    Ok(report)
}

/// `Σ_e |e| Σ_q w_q (u(x(λ_q)) − u_h(λ_q))²`.
fn karcher_l2_error(
    level: &SurfaceLevel,
    sys: &P1System,
    maps: &[karcher_core::karcher::BarycentricMap],
    uh: &DVector<f64>,
    rule: &Rule,
) -> Result<f64, HarnessError> {
    let c = &level.complex;
    let local = maps
        .par_iter()
        .enumerate()
        .map(|(e, map)| {
            let u: Vec<f64> = c.simplices(2)[e].iter().map(|&v| uh[v]).collect();
            let mut s = 0.0;
            for (node, w) in rule.nodes.iter().zip(&rule.weights) {
                let x = map.bary_map(node)?;
                let uh: f64 = node.iter().zip(&u).map(|(l, v)| l * v).sum();
                s += w * (y2(x.coords()) / 6.0 - uh).powi(2);
            }
            Ok(sys.volumes[e] * s)
        })
        .collect::<Result<Vec<f64>, karcher_core::karcher::KarcherError>>()
        .context("evaluating the error")?;
    Ok(local.iter().sum::<f64>().sqrt())
}

fn sphere_level(depth: usize, solver: SolverParams) -> Result<Vec<Row>, HarnessError> {
    let level = families::icosphere(depth)?;
    let c = &level.complex;
    let sys = fem::assemble(c, &level.metric).context("assembling from edge lengths")?;
    let maps = fem::karcher_maps(c, &level.points, solver).context("building element maps")?;
    let rule = quadrature::grundmann_moller(2, LOAD_DEGREE);
    let load = fem::load_vector(c, &sys, &rule, |e, lambda| {
        Ok::<_, karcher_core::karcher::KarcherError>(y2(maps[e].bary_map(lambda)?.coords()))
    })
    .context("integrating the load")?;
    let uh = fem::poisson_p1(
        &sys,
        &Rhs::Load(recentre(&sys, load)),
        &BoundaryCondition::ZeroMean,
    )
    .context("solving")?;
    let l2 = karcher_l2_error(&level, &sys, &maps, &uh, &rule)?;

    let pullback = fem::assemble_pullback(c, &level.points, solver)
        .context("assembling from the pullback metric")?;
    let samples = DVector::from_iterator(c.count(0), level.points.iter().map(|p| y2(p.coords())));
    let load_of = |s: &P1System| Rhs::Load(recentre(s, linalg::spmv(&s.mass, &samples)));
    let gap = fem::compare_metrics(
        &pullback,
        &sys,
        &load_of(&pullback),
        &load_of(&sys),
        &BoundaryCondition::ZeroMean,
    )
    .context("comparing metrics")?;

    let iterations = families::max_iterations(&level, solver)?;
    let info = |family| LevelInfo {
        family,
        level: depth,
        h: level.h(),
        theta_min: level.theta_min(),
        iterations,
    };
    Ok(vec![
        info(SPHERE).row(L2, l2),
        info(GAP).row(GAP_L2, gap.l2),
    ])
}
