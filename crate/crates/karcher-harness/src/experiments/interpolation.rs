//! Interpolation errors of scalar functions and of maps into the sphere.
//!
//! - `s2_cap`: `u = z` on a refined geodesic triangle around the north pole,
//!   compared with its Lagrange interpolant `u_h(λ) = Σ λⁱ u(pᵢ)` at the
//!   nodes of a degree-4 rule.  The gradient error is the `g^e`-dual norm
//!   of `d(u∘x) − du_h`, with `d(u∘x)` evaluated exactly from the ambient
//!   gradient of `z` and finite-difference differentials of `x`.
//! - `flat_to_s2`: the inverse stereographic map `y` of a refined flat
//!   triangle, compared with its Karcher interpolant `y_h` in geodesic
//!   distance.

use karcher_core::karcher::{self, BarycentricMap, KarcherError, SolverParams, FD_STEP};
use karcher_core::manifold::{ManifoldKind, ManifoldPoint, ManifoldTag};
use karcher_core::meshes::{self, Mesh};
use karcher_core::quadrature;
use nalgebra::DVector;
use rayon::prelude::*;

use super::{per_level, slope_of, solver, within, LevelInfo};
use crate::config::ExperimentConfig;
use crate::families;
use crate::report::{Report, Row};
use crate::{Context, HarnessError};

pub const CAP: &str = "s2_cap";
pub const MAP: &str = "flat_to_s2";
pub const VALUE: &str = "value_error";
pub const GRADIENT: &str = "gradient_error";
pub const MAP_ERROR: &str = "map_error";

const QUAD_DEGREE: usize = 4;

pub fn run(cfg: &ExperimentConfig) -> Result<Report, HarnessError> {
    cfg.manifold_or(ManifoldKind::Sphere, &[ManifoldKind::Sphere])?;
    let rows = per_level(cfg.depths_or(1, 5), |d| {
        let mut rows = scalar_level(d, solver(cfg))?;
        rows.push(map_level(d, solver(cfg))?);
        Ok(rows)
    })?;
    let mut report = Report {
        rows: rows.into_iter().flatten().collect(),
        ..Report::default()
    };
    slope_of(&mut report, CAP, VALUE, Some(within(2.0, 0.3)))?;
    slope_of(&mut report, CAP, GRADIENT, Some(within(1.0, 0.3)))?;
    slope_of(&mut report, MAP, MAP_ERROR, Some(within(2.0, 0.3)))?;
    Ok(report)
}

/// Value and gradient errors of the interpolant on one element.
fn element_errors(map: &BarycentricMap, nodes: &[Vec<f64>]) -> Result<(f64, f64), KarcherError> {
    let z: Vec<f64> = map.points().iter().map(|p| p.coords()[2]).collect();
    let uh = karcher::interpolate_scalar(map, &z);
    let ginv = map.flat_gram().try_inverse().ok_or(KarcherError::Empty)?;
    let mut value = 0.0f64;
    let mut gradient = 0.0f64;
    for lambda in nodes {
        let x = map.bary_map(lambda)?;
        value = value.max((x.coords()[2] - uh.eval(lambda)).abs());
        // d(u∘x)(eₐ − e₀) = ⟨∇z, dx(eₐ − e₀)⟩ with ∇z = (0,0,1)
        let dx = map.edge_differentials(lambda, FD_STEP)?;
        let delta = DVector::from_iterator(
            dx.len(),
            dx.iter().enumerate().map(|(a, d)| d[2] - (z[a + 1] - z[0])),
        );
        gradient = gradient.max(delta.dot(&(&ginv * &delta)).max(0.0).sqrt());
    }
    Ok((value, gradient))
}

fn scalar_level(depth: usize, solver: SolverParams) -> Result<Vec<Row>, HarnessError> {
    let level = families::sphere_cap(depth)?;
    let maps = karcher_core::fem::karcher_maps(&level.complex, &level.points, solver)
        .context("building element maps")?;
    let nodes = quadrature::grundmann_moller(2, QUAD_DEGREE).nodes;
    let errs = maps
        .par_iter()
        .map(|m| element_errors(m, &nodes))
        .collect::<Result<Vec<_>, _>>()
        .context("interpolating u = z")?;
    let (value, gradient) = errs
        .iter()
        .fold((0.0f64, 0.0f64), |(v, g), e| (v.max(e.0), g.max(e.1)));
    let info = LevelInfo {
        family: CAP,
        level: depth,
        h: level.h(),
        theta_min: level.theta_min(),
        iterations: families::max_iterations(&level, solver)?,
    };
    Ok(vec![info.row(VALUE, value), info.row(GRADIENT, gradient)])
}

/// Inverse stereographic projection from the south pole, `0 ↦ (0,0,1)`.
pub fn stereographic(q: &[f64]) -> Vec<f64> {
    let r2 = q[0] * q[0] + q[1] * q[1];
    vec![
        2.0 * q[0] / (1.0 + r2),
        2.0 * q[1] / (1.0 + r2),
        (1.0 - r2) / (1.0 + r2),
    ]
}

/// The flat domain triangle of the map study.
pub fn map_domain(depth: usize) -> Mesh {
    let base = Mesh {
        elements: vec![vec![0, 1, 2]],
        coords: vec![vec![-0.4, -0.3], vec![0.5, -0.3], vec![0.05, 0.5]],
    };
    (0..depth).fold(base, |m, _| meshes::refine_triangles(&m, |p| p.to_vec()))
}

fn map_level(depth: usize, solver: SolverParams) -> Result<Row, HarnessError> {
    let tag = ManifoldTag::sphere(2);
    let mesh = map_domain(depth);
    let nodes = quadrature::grundmann_moller(2, QUAD_DEGREE).nodes;
    let per_element = mesh
        .elements
        .par_iter()
        .map(|t| -> Result<(f64, f64, f64, usize), HarnessError> {
            let domain: Vec<DVector<f64>> = t
                .iter()
                .map(|&v| DVector::from_column_slice(&mesh.coords[v]))
                .collect();
            let image: Vec<ManifoldPoint> = t
                .iter()
                .map(|&v| tag.point(stereographic(&mesh.coords[v])))
                .collect::<Result<_, _>>()
                .context("mapping vertices")?;
            let interp =
                karcher::interpolate_map(domain.clone(), image, solver).context("building y_h")?;
            let mut err = 0.0f64;
            for lambda in &nodes {
                let q: Vec<f64> = (0..2)
                    .map(|k| lambda.iter().zip(&domain).map(|(l, p)| l * p[k]).sum())
                    .collect();
                let yh = interp.eval(&q).context("evaluating y_h")?;
                let y = tag.point(stereographic(&q)).context("evaluating y")?;
                err = err.max(tag.dist(&y, &yh).context("measuring")?);
            }
            let h = (0..3)
                .flat_map(|a| (a + 1..3).map(move |b| (a, b)))
                .map(|(a, b)| (&domain[a] - &domain[b]).norm())
                .fold(0.0, f64::max);
            let l = interp.image().edge_lengths().clone();
            let theta = karcher_core::simplex::fullness(&l, l.diameter());
            let iters = interp
                .image()
                .solve(&[1.0 / 3.0; 3])
                .context("solving barycentre")?
                .iterations;
            Ok((err, h, theta, iters))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let err = per_element.iter().map(|e| e.0).fold(0.0, f64::max);
    let info = LevelInfo {
        family: MAP,
        level: depth,
        h: per_element.iter().map(|e| e.1).fold(0.0, f64::max),
        theta_min: per_element
            .iter()
            .map(|e| e.2)
            .fold(f64::INFINITY, f64::min),
        iterations: per_element.iter().map(|e| e.3).max().unwrap_or(0),
    };
    Ok(info.row(MAP_ERROR, err))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    #[test]
    fn stereographic_lands_on_the_sphere() {
        for q in [[0.0, 0.0], [0.3, -0.2], [1.0, 1.0]] {
            let y = Vector3::from_vec(stereographic(&q));
            assert!((y.norm() - 1.0).abs() < 1e-15);
        }
        assert_eq!(stereographic(&[0.0, 0.0]), vec![0.0, 0.0, 1.0]);
    }
}
