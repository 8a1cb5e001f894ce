//! Refinement families and random meshes used by the experiments.

use karcher_core::complex::{Complex, DiscreteMetric};
use karcher_core::karcher::SolverParams;
use karcher_core::manifold::{ManifoldPoint, ManifoldTag};
use karcher_core::meshes::{self, Mesh};
use karcher_core::simplex;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::{Context, HarnessError};

/// One refinement level of a triangulated surface with vertex points on a
/// model manifold and the geodesic edge-length metric.
#[derive(Debug, Clone)]
pub struct SurfaceLevel {
    pub depth: usize,
    pub tag: ManifoldTag,
    pub complex: Complex,
    pub metric: DiscreteMetric,
    pub points: Vec<ManifoldPoint>,
}

impl SurfaceLevel {
    pub fn new(depth: usize, tag: ManifoldTag, mesh: &Mesh) -> Result<Self, HarnessError> {
        let complex = mesh.complex().context("building the complex")?;
        let points = mesh
            .coords
            .iter()
            .map(|p| tag.point(p.clone()))
            .collect::<Result<Vec<_>, _>>()
            .context("placing the vertices")?;
        let metric = DiscreteMetric::from_points(&complex, &tag, &points)
            .context("measuring edge lengths")?;
        Ok(Self {
            depth,
            tag,
            complex,
            metric,
            points,
        })
    }

    /// Largest edge length.
    pub fn h(&self) -> f64 {
        self.metric.mesh_size()
    }

    /// Smallest element fullness, each element measured at its own diameter.
    pub fn theta_min(&self) -> f64 {
        theta_min(&self.complex, &self.metric)
    }

    /// Ambient coordinates of the vertices of element `e` in sorted-key order.
    pub fn element_coords(&self, e: usize) -> Vec<&[f64]> {
        self.complex.simplices(self.complex.n())[e]
            .iter()
            .map(|&v| self.points[v].coords())
            .collect()
    }
}

pub fn theta_min(c: &Complex, m: &DiscreteMetric) -> f64 {
    (0..c.count(c.n()))
        .map(|e| {
            let l = m.element_lengths(c, e);
            simplex::fullness(&l, l.diameter())
        })
        .fold(f64::INFINITY, f64::min)
}

/// The icosahedron refined `depth` times on the unit sphere.
pub fn icosphere(depth: usize) -> Result<SurfaceLevel, HarnessError> {
    SurfaceLevel::new(depth, ManifoldTag::sphere(2), &meshes::icosphere(depth))
}

/// Corners of the spherical cap used by the interpolation study: polar angle
/// 0.6 around the north pole.
pub fn cap_corners() -> [[f64; 3]; 3] {
    let polar = 0.6f64;
    let corner = |az: f64| [polar.sin() * az.cos(), polar.sin() * az.sin(), polar.cos()];
    let third = 2.0 * std::f64::consts::PI / 3.0;
    [
        corner(0.5 * std::f64::consts::PI),
        corner(0.5 * std::f64::consts::PI + third),
        corner(0.5 * std::f64::consts::PI + 2.0 * third),
    ]
}

/// A geodesic triangle around the north pole refined `depth` times.
pub fn sphere_cap(depth: usize) -> Result<SurfaceLevel, HarnessError> {
    SurfaceLevel::new(
        depth,
        ManifoldTag::sphere(2),
        &meshes::spherical_patch(cap_corners(), depth),
    )
}

/// Geodesic midpoint on the hyperboloid: the Lorentz normalization of the
/// chord midpoint.
fn hyperboloid_normalize(v: &[f64]) -> Vec<f64> {
    let q = v[0] * v[0] - v[1..].iter().map(|x| x * x).sum::<f64>();
    v.iter().map(|x| x / q.sqrt()).collect()
}

/// A geodesic triangle of the hyperbolic plane (vertices at distance 0.8
/// from the origin) refined `depth` times by geodesic midpoints.
pub fn hyperbolic_triangle(depth: usize) -> Result<SurfaceLevel, HarnessError> {
    let r = 0.8f64;
    let third = 2.0 * std::f64::consts::PI / 3.0;
    let coords = (0..3)
        .map(|i| {
            let az = 0.5 * std::f64::consts::PI + i as f64 * third;
            vec![r.cosh(), r.sinh() * az.cos(), r.sinh() * az.sin()]
        })
        .collect();
    let base = Mesh {
        elements: vec![vec![0, 1, 2]],
        coords,
    };
    let mesh = (0..depth).fold(base, |m, _| {
        meshes::refine_triangles(&m, hyperboloid_normalize)
    });
    SurfaceLevel::new(depth, ManifoldTag::hyperbolic(2), &mesh)
}

/// The unit square with `2^(depth+1)` cells per side.
pub fn unit_square(depth: usize) -> Result<SurfaceLevel, HarnessError> {
    SurfaceLevel::new(
        depth,
        ManifoldTag::euclidean(2),
        &meshes::square_grid(1 << (depth + 1)),
    )
}

/// Largest interior angle over the elements of a planar mesh.
pub fn max_angle(mesh: &Mesh) -> f64 {
    let angle = |a: &[f64], b: &[f64], c: &[f64]| {
        let u = [b[0] - a[0], b[1] - a[1]];
        let v = [c[0] - a[0], c[1] - a[1]];
        let cos = (u[0] * v[0] + u[1] * v[1])
            / ((u[0] * u[0] + u[1] * u[1]).sqrt() * (v[0] * v[0] + v[1] * v[1]).sqrt());
        cos.clamp(-1.0, 1.0).acos()
    };
    mesh.elements
        .iter()
        .flat_map(|t| {
            let [a, b, c] = [&mesh.coords[t[0]], &mesh.coords[t[1]], &mesh.coords[t[2]]];
            [angle(a, b, c), angle(b, c, a), angle(c, a, b)]
        })
        .fold(0.0, f64::max)
}

/// A random well-centred planar mesh: a `5×4` patch of the unit triangular
/// lattice with every vertex moved uniformly by up to 0.15 per coordinate,
/// redrawn until every angle is at most 85°.
pub fn random_well_centred(rng: &mut ChaCha8Rng) -> Mesh {
    loop {
        let mut mesh = meshes::equilateral_patch(5, 4);
        for p in &mut mesh.coords {
            p[0] += rng.gen_range(-0.15..0.15);
            p[1] += rng.gen_range(-0.15..0.15);
        }
        if max_angle(&mesh) <= 85f64.to_radians() {
            return mesh;
        }
    }
}

/// Largest Karcher iteration count at the element barycentres.
pub fn max_iterations(level: &SurfaceLevel, solver: SolverParams) -> Result<usize, HarnessError> {
    use rayon::prelude::*;
    let n = level.complex.n();
    let lambda = vec![1.0 / (n + 1) as f64; n + 1];
    let counts = level
        .complex
        .simplices(n)
        .par_iter()
        .map(|key| {
            let pts: Vec<ManifoldPoint> = key.iter().map(|&v| level.points[v].clone()).collect();
            karcher_core::karcher::karcher_mean(&pts, &lambda, solver).map(|r| r.iterations)
        })
        .collect::<Result<Vec<_>, _>>()
        .context("solving barycentres")?;
    Ok(counts.into_iter().max().unwrap_or(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn refinement_halves_h_at_bounded_fullness() {
        for family in [icosphere, sphere_cap, hyperbolic_triangle, unit_square] {
            let a = family(2).unwrap();
            let b = family(3).unwrap();
            let ratio = b.h() / a.h();
            assert!((0.45..0.56).contains(&ratio), "{ratio}");
            assert!(b.theta_min() > 0.5 * a.theta_min());
        }
    }

    #[test]
    fn hyperbolic_midpoints_lie_on_the_hyperboloid() {
        let lv = hyperbolic_triangle(2).unwrap();
        for p in &lv.points {
            let c = p.coords();
            assert!((c[0] * c[0] - c[1] * c[1] - c[2] * c[2] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn random_meshes_are_acute_and_reproducible() {
        let a = random_well_centred(&mut ChaCha8Rng::seed_from_u64(3));
        let b = random_well_centred(&mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
        assert!(max_angle(&a) < std::f64::consts::FRAC_PI_2);
    }
}
