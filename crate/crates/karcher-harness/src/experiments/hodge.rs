//! Harmonic dimensions and Hodge decompositions in the piecewise-constant
//! form spaces.
//!
//! - `torus`: the 4×4 periodic equilateral lattice with unit edge lengths;
//!   the harmonic spaces in degrees 0, 1, 2 have dimensions 1, 2, 1.
//! - `s2_icosphere`: the depth-1 icosphere with geodesic edge lengths; the
//!   degree-1 harmonic space is trivial.
//!
//! On both complexes a random 1-form (seeded from the config) is split into
//! exact, coexact and harmonic parts; reassembly, pairwise orthogonality and
//! closedness of the harmonic part are checked.

use karcher_core::complex::{Complex, DiscreteMetric};
use karcher_core::dec::{self, Pm1Form};
use karcher_core::meshes;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{within, LevelInfo};
use crate::config::ExperimentConfig;
use crate::families::{self, theta_min};
use crate::report::{Criterion, Report};
use crate::{Context, HarnessError};

pub const TORUS: &str = "torus";
pub const SPHERE: &str = "s2_icosphere";
pub const REASSEMBLY: &str = "reassembly_residual";
pub const ORTHOGONALITY: &str = "orthogonality_residual";
pub const HARMONIC: &str = "harmonic_residual";

const RESIDUAL_TOL: f64 = 1e-9;
const TORUS_SIZE: usize = 4;
const SPHERE_DEPTH: usize = 1;

fn dimension(k: usize) -> String {
    format!("harmonic_dim_{k}")
}

pub fn run(cfg: &ExperimentConfig) -> Result<Report, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let torus = meshes::torus_lattice(TORUS_SIZE)
        .complex()
        .context("building the torus")?;
    let unit = DiscreteMetric::new(&torus, vec![1.0; torus.count(1)]).context("unit lengths")?;
    let mut report = study(TORUS, &torus, &unit, &[1, 2, 1], &mut rng)?;
    let sphere = families::icosphere(SPHERE_DEPTH)?;
    report.extend(study(
        SPHERE,
        &sphere.complex,
        &sphere.metric,
        &[1, 0, 1],
        &mut rng,
    )?);
    Ok(report)
}

fn study(
    family: &str,
    c: &Complex,
    m: &DiscreteMetric,
    betti: &[usize],
    rng: &mut ChaCha8Rng,
) -> Result<Report, HarnessError> {
    let (_, ops) = dec::operators_for(c, m).context("building operators")?;
    let info = LevelInfo {
        family,
        level: 0,
        h: m.mesh_size(),
        theta_min: theta_min(c, m),
        iterations: 0,
    };
    let mut report = Report::default();
    for (k, &b) in betti.iter().enumerate() {
        let dim = ops.harmonic_dimension(k) as f64;
        report.rows.push(info.row(&dimension(k), dim));
        report.check(family, &dimension(k), dim, within(b as f64, 0.0));
    }
    let u = Pm1Form {
        degree: 1,
        coeffs: DVector::from_fn(c.count(1), |_, _| rng.gen_range(-1.0..1.0)),
    };
    let parts = dec::hodge_pm1(&ops, &u).context("decomposing a random 1-form")?;
    for (q, v) in [
        (REASSEMBLY, parts.reassembly_residual),
        (ORTHOGONALITY, parts.orthogonality_residual),
        (HARMONIC, parts.harmonic_residual),
    ] {
        report.rows.push(info.row(q, v));
        report.check(family, q, v, Criterion::AtMost(RESIDUAL_TOL));
    }
    Ok(report)
}
