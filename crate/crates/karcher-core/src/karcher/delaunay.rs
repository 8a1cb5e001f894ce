//! Karcher–Delaunay triangulations of 2-manifolds from a vertex set.
//!
//! The Voronoi tessellation is located by brute force: a dense sample set of
//! the manifold is labelled by nearest vertex (ties to the lowest id), and
//! every triple of labels meeting in a sample's neighbourhood becomes a
//! candidate triangle.  A candidate is accepted only after an exact check:
//! its equidistant point must be a Voronoi vertex, i.e. no other vertex is
//! closer.  More than three equidistant vertices, or one vertex triple
//! realized at two distinct Voronoi vertices, make the configuration
//! non-generic and are reported as errors.

use std::collections::{BTreeMap, BTreeSet};

use crate::complex::{Complex, DiscreteMetric};
use crate::manifold::{ManifoldKind, ManifoldPoint, ManifoldTag};
use crate::meshes;

use super::KarcherError;

/// Sampling and tolerance settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelaunayOptions {
    /// Sphere: icosphere depth of the sample set.  Torus and hyperbolic
    /// plane: the sample grid has `8·2^resolution` points per side.
    pub resolution: usize,
    /// Distances within this tolerance count as ties.
    pub tie_tol: f64,
}

impl Default for DelaunayOptions {
    fn default() -> Self {
        Self {
            resolution: 5,
            tie_tol: 1e-9,
        }
    }
}

struct Samples {
    points: Vec<Vec<f64>>,
    neighbours: Vec<Vec<usize>>,
}

fn sphere_samples(resolution: usize) -> Samples {
    let mesh = meshes::icosphere(resolution);
    let mut neighbours = vec![BTreeSet::new(); mesh.coords.len()];
    for t in &mesh.elements {
        for a in 0..3 {
            for b in 0..3 {
                if a != b {
                    neighbours[t[a]].insert(t[b]);
                }
            }
        }
    }
    Samples {
        points: mesh.coords,
        neighbours: neighbours
            .into_iter()
            .map(|s| s.into_iter().collect())
            .collect(),
    }
}

/// `side×side` grid with 8-neighbour adjacency; `wrap` closes it periodically.
fn grid_samples(side: usize, wrap: bool, place: impl Fn(f64, f64) -> Vec<f64>) -> Samples {
    let mut points = Vec::with_capacity(side * side);
    for j in 0..side {
        for i in 0..side {
            points.push(place(i as f64 / side as f64, j as f64 / side as f64));
        }
    }
    let mut neighbours = vec![Vec::new(); side * side];
    for j in 0..side as i64 {
        for i in 0..side as i64 {
            for dj in -1..=1i64 {
                for di in -1..=1i64 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let (mut x, mut y) = (i + di, j + dj);
                    if wrap {
                        x = x.rem_euclid(side as i64);
                        y = y.rem_euclid(side as i64);
                    } else if x < 0 || y < 0 || x >= side as i64 || y >= side as i64 {
                        continue;
                    }
                    neighbours[(j * side as i64 + i) as usize].push((y * side as i64 + x) as usize);
                }
            }
        }
    }
    Samples { points, neighbours }
}

fn cross(a: &[f64], b: &[f64]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Planar circumcentre of three points.
fn planar_circumcentre(a: &[f64], b: &[f64], c: &[f64]) -> Option<[f64; 2]> {
    let (bx, by) = (b[0] - a[0], b[1] - a[1]);
    let (cx, cy) = (c[0] - a[0], c[1] - a[1]);
    let d = 2.0 * (bx * cy - by * cx);
    if d.abs() < 1e-300 {
        return None;
    }
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    Some([
        a[0] + (cy * b2 - by * c2) / d,
        a[1] + (bx * c2 - cx * b2) / d,
    ])
}

/// The representative of `p` nearest to `anchor` (torus) in the plane.
fn unwrap_near(tag: &ManifoldTag, anchor: &[f64], p: &[f64]) -> Vec<f64> {
    let d = tag.log_raw(anchor, p).expect("torus log is total");
    anchor.iter().zip(&d).map(|(a, x)| a + x).collect()
}

/// Candidate equidistant point of a vertex triple, chosen near `sample`.
fn equidistant_point(
    tag: &ManifoldTag,
    a: &[f64],
    b: &[f64],
    c: &[f64],
    sample: &[f64],
) -> Option<Vec<f64>> {
    match tag.kind() {
        ManifoldKind::Sphere => {
            let n = cross(&sub(b, a), &sub(c, a));
            let r = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
            if r < 1e-300 {
                return None;
            }
            let sign = if n.iter().zip(sample).map(|(x, y)| x * y).sum::<f64>() >= 0.0 {
                1.0
            } else {
                -1.0
            };
            Some(n.iter().map(|x| sign * x / r).collect())
        }
        ManifoldKind::FlatTorus => {
            let (ua, ub, uc) = (
                unwrap_near(tag, sample, a),
                unwrap_near(tag, sample, b),
                unwrap_near(tag, sample, c),
            );
            let cc = planar_circumcentre(&ua, &ub, &uc)?;
            tag.project(cc.to_vec()).ok().map(|p| p.into_coords())
        }
        ManifoldKind::Hyperbolic => {
            // ⟨z, b−a⟩_L = ⟨z, c−a⟩_L = 0 makes z equidistant; z = J((b−a)×(c−a))
            let n = cross(&sub(b, a), &sub(c, a));
            let z = [-n[0], n[1], n[2]];
            let q = -z[0] * z[0] + z[1] * z[1] + z[2] * z[2];
            if q >= 0.0 {
                return None;
            }
            let s = (-q).sqrt() * z[0].signum();
            Some(z.iter().map(|x| x / s).collect())
        }
        ManifoldKind::Euclidean => None,
    }
}

fn orient(tag: &ManifoldTag, tri: [usize; 3], pts: &[ManifoldPoint], centre: &[f64]) -> Vec<usize> {
    let p = |i: usize| pts[i].coords();
    let positive = match tag.kind() {
        ManifoldKind::Sphere => {
            let n = cross(p(tri[1]), p(tri[2]));
            p(tri[0]).iter().zip(&n).map(|(x, y)| x * y).sum::<f64>() > 0.0
        }
        ManifoldKind::FlatTorus => {
            let u: Vec<Vec<f64>> = tri
                .iter()
                .map(|&i| unwrap_near(tag, centre, p(i)))
                .collect();
            let (b, c) = (sub(&u[1], &u[0]), sub(&u[2], &u[0]));
            b[0] * c[1] - b[1] * c[0] > 0.0
        }
        _ => {
            // Poincaré disk coordinates preserve orientation
            let d: Vec<[f64; 2]> = tri
                .iter()
                .map(|&i| {
                    let x = p(i);
                    [x[1] / (1.0 + x[0]), x[2] / (1.0 + x[0])]
                })
                .collect();
            let (bx, by) = (d[1][0] - d[0][0], d[1][1] - d[0][1]);
            let (cx, cy) = (d[2][0] - d[0][0], d[2][1] - d[0][1]);
            bx * cy - by * cx > 0.0
        }
    };
    if positive {
        tri.to_vec()
    } else {
        vec![tri[0], tri[2], tri[1]]
    }
}

/// Delaunay complex and geodesic edge lengths of a vertex set on `S²`, the
/// flat torus `T²` or the hyperbolic plane `H²`.
pub fn delaunay(
    tag: &ManifoldTag,
    pts: &[ManifoldPoint],
    opts: DelaunayOptions,
) -> Result<(Complex, DiscreteMetric), KarcherError> {
    if tag.intrinsic_dim() != 2 || tag.kind() == ManifoldKind::Euclidean {
        return Err(KarcherError::NotSurface(tag.intrinsic_dim()));
    }
    if pts.len() < 3 {
        return Err(KarcherError::NonGeneric(format!(
            "{} vertices cannot span a triangle",
            pts.len()
        )));
    }
    for p in pts {
        if p.tag() != *tag {
            return Err(crate::manifold::ManifoldError::TagMismatch(*tag, p.tag()).into());
        }
    }
    let side = 8usize << opts.resolution;
    let samples = match tag.kind() {
        ManifoldKind::Sphere => sphere_samples(opts.resolution),
        ManifoldKind::FlatTorus => grid_samples(side, true, |x, y| vec![x, y]),
        _ => {
            let o = [1.0, 0.0, 0.0];
            let reach = pts
                .iter()
                .map(|p| tag.dist_raw(&o, p.coords()))
                .fold(0.0, f64::max)
                * 1.1
                + 1e-3;
            grid_samples(side + 1, false, |x, y| {
                let u = [0.0, reach * (2.0 * x - 1.0), reach * (2.0 * y - 1.0)];
                tag.exp_raw(&o, &u)
            })
        }
    };

    let labels: Vec<usize> = samples
        .points
        .iter()
        .map(|s| {
            let mut best = (f64::INFINITY, 0);
            for (i, p) in pts.iter().enumerate() {
                let d = tag.dist_raw(s, p.coords());
                if d < best.0 {
                    best = (d, i);
                }
            }
            best.1
        })
        .collect();

    let mut candidates: BTreeSet<([usize; 3], usize)> = BTreeSet::new();
    for (s, nb) in samples.neighbours.iter().enumerate() {
        let mut set: BTreeSet<usize> = nb.iter().map(|&t| labels[t]).collect();
        set.insert(labels[s]);
        if set.len() < 3 {
            continue;
        }
        let l: Vec<usize> = set.into_iter().collect();
        for i in 0..l.len() {
            for j in (i + 1)..l.len() {
                for k in (j + 1)..l.len() {
                    candidates.insert(([l[i], l[j], l[k]], s));
                }
            }
        }
    }

    let mut accepted: BTreeMap<[usize; 3], Vec<f64>> = BTreeMap::new();
    for (tri, s) in candidates {
        let (a, b, c) = (
            pts[tri[0]].coords(),
            pts[tri[1]].coords(),
            pts[tri[2]].coords(),
        );
        let Some(centre) = equidistant_point(tag, a, b, c, &samples.points[s]) else {
            continue;
        };
        let r = tag.dist_raw(&centre, a);
        if (tag.dist_raw(&centre, b) - r).abs() > opts.tie_tol
            || (tag.dist_raw(&centre, c) - r).abs() > opts.tie_tol
        {
            continue;
        }
        let mut ties = 0;
        let mut empty = true;
        for p in pts {
            let d = tag.dist_raw(&centre, p.coords());
            if d < r - opts.tie_tol {
                empty = false;
                break;
            }
            if d <= r + opts.tie_tol {
                ties += 1;
            }
        }
        if !empty {
            continue;
        }
        if ties > 3 {
            return Err(KarcherError::NonGeneric(format!(
                "{ties} vertices are equidistant from one Voronoi vertex"
            )));
        }
        match accepted.get(&tri) {
            Some(existing) if tag.dist_raw(existing, &centre) > 1e-6 => {
                return Err(KarcherError::DuplicateSimplex(tri.to_vec()));
            }
            Some(_) => {}
            None => {
                accepted.insert(tri, centre);
            }
        }
    }
    if accepted.is_empty() {
        return Err(KarcherError::NonGeneric("no Voronoi vertex found".into()));
    }
    let elements: Vec<Vec<usize>> = accepted
        .iter()
        .map(|(t, c)| orient(tag, *t, pts, c))
        .collect();
    let complex = Complex::with_vertex_count(pts.len(), elements)?;
    let closed_model = matches!(tag.kind(), ManifoldKind::Sphere | ManifoldKind::FlatTorus);
    if closed_model && !complex.is_closed() {
        return Err(KarcherError::NonGeneric(
            "Delaunay complex of a closed surface has a boundary".into(),
        ));
    }
    let metric = DiscreteMetric::from_points(&complex, tag, pts)?;
    Ok((complex, metric))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere_points(raw: &[Vec<f64>]) -> Vec<ManifoldPoint> {
        raw.iter()
            .map(|c| ManifoldTag::sphere(2).point(c.clone()).unwrap())
            .collect()
    }

    #[test]
    fn octahedron_vertices() {
        let tag = ManifoldTag::sphere(2);
        let pts = sphere_points(&meshes::octahedron().coords);
        let (c, m) = delaunay(
            &tag,
            &pts,
            DelaunayOptions {
                resolution: 3,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(c.counts(), vec![6, 12, 8]);
        assert_eq!(c.euler_characteristic(), 2);
        assert!(c.check_orientation());
        assert!(m
            .lengths()
            .iter()
            .all(|l| (l - std::f64::consts::FRAC_PI_2).abs() < 1e-9));
    }

    #[test]
    fn cube_vertices_are_not_generic() {
        let s = 1.0 / 3f64.sqrt();
        let raw: Vec<Vec<f64>> = (0..8)
            .map(|i| {
                vec![
                    if i & 1 == 0 { s } else { -s },
                    if i & 2 == 0 { s } else { -s },
                    if i & 4 == 0 { s } else { -s },
                ]
            })
            .collect();
        let r = delaunay(
            &ManifoldTag::sphere(2),
            &sphere_points(&raw),
            DelaunayOptions {
                resolution: 3,
                ..Default::default()
            },
        );
        assert!(matches!(r, Err(KarcherError::NonGeneric(_))));
    }

    #[test]
    fn great_circle_triple_is_duplicated() {
        // three equatorial points plus nothing else: both poles are Voronoi
        // vertices of the same triple
        let raw = vec![
            vec![1.0, 0.0, 0.0],
            vec![-0.5, 3f64.sqrt() / 2.0, 0.0],
            vec![-0.5, -(3f64.sqrt()) / 2.0, 0.0],
        ];
        let r = delaunay(
            &ManifoldTag::sphere(2),
            &sphere_points(&raw),
            DelaunayOptions {
                resolution: 3,
                ..Default::default()
            },
        );
        assert!(matches!(r, Err(KarcherError::DuplicateSimplex(_))));
    }
}
