//! The piecewise-constant projection of `dx` on the equilateral unit mesh.
//!
//! On a triangle whose edge `ij` is parallel to the x-axis the projected
//! form has coefficients `α_ij = 2` and `α_ik = α_kj = 1`, i.e. twice the
//! values of `dx` on the unit edge vectors, and its per-triangle energy is
//! twice the analytic `‖dx‖² |ijk| = |ijk|`.  One row per triangle records
//! that ratio; the coefficient pattern and `underline_d = 0` are checked.
//!
//! For comparison the Dirichlet problem with boundary values of `x` is
//! solved in the piecewise-constant 0-forms; it reproduces `x` at the
//! vertices and its per-triangle energy ratio is recorded as well.

use karcher_core::complex::DiscreteMetric;
use karcher_core::dec::{self, BoundaryCondition, ConstantCovector, Pm1Form};
use karcher_core::manifold::ManifoldKind;
use karcher_core::meshes;
use nalgebra::DVector;

use super::{within, LevelInfo};
use crate::config::ExperimentConfig;
use crate::families::theta_min;
use crate::report::{Criterion, Report};
use crate::{Context, HarnessError};

pub const FAMILY: &str = "equilateral_unit";
pub const RATIO: &str = "energy_ratio";
pub const DIRICHLET_RATIO: &str = "dirichlet_energy_ratio";
pub const COEFFICIENTS: &str = "coefficient_deviation";
pub const CLOSED: &str = "underline_d_norm";
pub const REPRODUCTION: &str = "dirichlet_vertex_error";

/// Mesh size of the patch in rhombi per side.
const PATCH: (usize, usize) = (4, 4);

pub fn run(cfg: &ExperimentConfig) -> Result<Report, HarnessError> {
    cfg.manifold_or(ManifoldKind::Euclidean, &[ManifoldKind::Euclidean])?;
    let patch = meshes::equilateral_patch(PATCH.0, PATCH.1);
    let c = patch.complex().context("building the patch")?;
    let m = DiscreteMetric::from_coordinates(&c, &patch.coords);
    let (dv, ops) = dec::operators_for(&c, &m).context("building operators")?;
    let projection =
        dec::project_to_pm1(&ConstantCovector(vec![1.0, 0.0]), &c, &patch.coords, &dv, 4)
            .context("projecting dx")?;
    let alpha = &projection.form;

    // α_t = 2·dx(t̂) for every edge t: ±2 on axis-parallel edges, ±1 otherwise
    let deviation = c
        .simplices(1)
        .iter()
        .enumerate()
        .map(|(t, key)| {
            (alpha.coeffs[t] - 2.0 * (patch.coords[key[1]][0] - patch.coords[key[0]][0])).abs()
        })
        .fold(0.0, f64::max);
    let closed = ops
        .apply_ud(alpha)
        .context("differentiating")?
        .coeffs
        .amax();

    let boundary = c.boundary_vertices();
    let fixed: Vec<(usize, f64)> = (0..c.count(0))
        .filter(|&v| boundary[v])
        .map(|v| (v, patch.coords[v][0]))
        .collect();
    let zero = Pm1Form {
        degree: 0,
        coeffs: DVector::zeros(c.count(0)),
    };
    let u = dec::poisson_pm1(&ops, &zero, &BoundaryCondition::Dirichlet(fixed))
        .context("solving the Dirichlet problem")?;
    let reproduction = (0..c.count(0))
        .map(|v| (u.coeffs[v] - patch.coords[v][0]).abs())
        .fold(0.0, f64::max);

    let area = 3f64.sqrt() / 4.0;
    let theta = theta_min(&c, &m);
    let mut report = Report::default();
    // the ratio farthest from 2
    let mut worst_ratio = 2.0f64;
    for e in 0..c.count(2) {
        let info = LevelInfo {
            family: FAMILY,
            level: e,
            h: 1.0,
            theta_min: theta,
            iterations: 0,
        };
        let ratio = dec::form_energy(&ops, alpha, &[e]) / area;
        if (ratio - 2.0).abs() >= (worst_ratio - 2.0).abs() {
            worst_ratio = ratio;
        }
        report.rows.push(info.row(RATIO, ratio));
        let dirichlet =
            dec::dirichlet_energy_pm1(&ops, &u, &[e]).context("measuring energy")? / area;
        report.rows.push(info.row(DIRICHLET_RATIO, dirichlet));
    }
    report.check(FAMILY, RATIO, worst_ratio, within(2.0, 1e-10));
    report.check(FAMILY, COEFFICIENTS, deviation, Criterion::AtMost(1e-12));
    report.check(FAMILY, CLOSED, closed, Criterion::AtMost(1e-12));
    report.check(FAMILY, REPRODUCTION, reproduction, Criterion::AtMost(1e-12));
    Ok(report)
}
