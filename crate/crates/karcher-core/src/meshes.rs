//! Standard meshes used by tests and experiments: platonic spheres and their
//! geodesic refinements, planar grids and triangular lattices, a periodic
//! torus lattice and a Möbius band.

use std::collections::HashMap;

use crate::complex::{Complex, ComplexError};

/// Elements plus ambient vertex coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub elements: Vec<Vec<usize>>,
    pub coords: Vec<Vec<f64>>,
}

impl Mesh {
    /// Builds the combinatorial complex.
    pub fn complex(&self) -> Result<Complex, ComplexError> {
        Complex::with_vertex_count(self.coords.len(), self.elements.clone())
    }
}

fn normalize(v: &[f64]) -> Vec<f64> {
    let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / r).collect()
}

/// Regular icosahedron inscribed in the unit sphere, outward oriented.
pub fn icosahedron() -> Mesh {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ];
    let faces = [
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    Mesh {
        elements: faces.iter().map(|f| f.to_vec()).collect(),
        coords: raw.iter().map(|p| normalize(p)).collect(),
    }
}

/// Regular octahedron on the unit sphere, outward oriented.
pub fn octahedron() -> Mesh {
    let coords = vec![
        vec![1.0, 0.0, 0.0],
        vec![-1.0, 0.0, 0.0],
        vec![0.0, 1.0, 0.0],
        vec![0.0, -1.0, 0.0],
        vec![0.0, 0.0, 1.0],
        vec![0.0, 0.0, -1.0],
    ];
    let elements = vec![
        vec![0, 2, 4],
        vec![2, 1, 4],
        vec![1, 3, 4],
        vec![3, 0, 4],
        vec![2, 0, 5],
        vec![1, 2, 5],
        vec![3, 1, 5],
        vec![0, 3, 5],
    ];
    Mesh { elements, coords }
}

/// Vertices of a regular tetrahedron on the unit sphere.
pub fn tetrahedron_points() -> Vec<Vec<f64>> {
    let s = 1.0 / 3f64.sqrt();
    vec![
        vec![s, s, s],
        vec![s, -s, -s],
        vec![-s, s, -s],
        vec![-s, -s, s],
    ]
}

/// Splits every triangle into four through edge midpoints; `project` maps a
/// new midpoint onto the target surface.
pub fn refine_triangles(mesh: &Mesh, project: impl Fn(&[f64]) -> Vec<f64>) -> Mesh {
    let mut coords = mesh.coords.clone();
    let mut mids: HashMap<(usize, usize), usize> = HashMap::new();
    let mut mid = |a: usize, b: usize, coords: &mut Vec<Vec<f64>>| -> usize {
        let key = (a.min(b), a.max(b));
        *mids.entry(key).or_insert_with(|| {
            let m: Vec<f64> = coords[a]
                .iter()
                .zip(&coords[b])
                .map(|(x, y)| 0.5 * (x + y))
                .collect();
            coords.push(project(&m));
            coords.len() - 1
        })
    };
    let mut elements = Vec::with_capacity(mesh.elements.len() * 4);
    for t in &mesh.elements {
        let (a, b, c) = (t[0], t[1], t[2]);
        let ab = mid(a, b, &mut coords);
        let bc = mid(b, c, &mut coords);
        let ca = mid(c, a, &mut coords);
        elements.push(vec![a, ab, ca]);
        elements.push(vec![ab, b, bc]);
        elements.push(vec![ca, bc, c]);
        elements.push(vec![ab, bc, ca]);
    }
    Mesh { elements, coords }
}

/// Icosahedron refined `depth` times by geodesic midpoints on the unit sphere.
pub fn icosphere(depth: usize) -> Mesh {
    (0..depth).fold(icosahedron(), |m, _| refine_triangles(&m, normalize))
}

/// A single spherical triangle refined `depth` times by geodesic midpoints.
pub fn spherical_patch(corners: [[f64; 3]; 3], depth: usize) -> Mesh {
    let base = Mesh {
        elements: vec![vec![0, 1, 2]],
        coords: corners.iter().map(|c| normalize(c)).collect(),
    };
    (0..depth).fold(base, |m, _| refine_triangles(&m, normalize))
}

/// Unit square split into `k×k` cells, each cut by its rising diagonal;
/// counter-clockwise elements.
pub fn square_grid(k: usize) -> Mesh {
    let id = |i: usize, j: usize| j * (k + 1) + i;
    let mut coords = Vec::with_capacity((k + 1) * (k + 1));
    for j in 0..=k {
        for i in 0..=k {
            coords.push(vec![i as f64 / k as f64, j as f64 / k as f64]);
        }
    }
    let mut elements = Vec::with_capacity(2 * k * k);
    for j in 0..k {
        for i in 0..k {
            elements.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            elements.push(vec![id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    Mesh { elements, coords }
}

/// Patch of the unit triangular lattice with `a×b` rhombi, every triangle
/// equilateral with unit edges; counter-clockwise elements.  The lattice
/// rows are parallel to the x-axis.
pub fn equilateral_patch(a: usize, b: usize) -> Mesh {
    let id = |i: usize, j: usize| j * (a + 1) + i;
    let h = 3f64.sqrt() / 2.0;
    let mut coords = Vec::new();
    for j in 0..=b {
        for i in 0..=a {
            coords.push(vec![i as f64 + 0.5 * j as f64, h * j as f64]);
        }
    }
    let mut elements = Vec::new();
    for j in 0..b {
        for i in 0..a {
            elements.push(vec![id(i, j), id(i + 1, j), id(i, j + 1)]);
            elements.push(vec![id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    Mesh { elements, coords }
}

/// Periodic `k×k` triangular lattice (a flat torus with unit equilateral
/// triangles), `k ≥ 3`.  Coordinates are the planar lattice positions of the
/// fundamental domain and carry no wrap-around information.
pub fn torus_lattice(k: usize) -> Mesh {
    assert!(
        k >= 3,
        "the torus lattice needs k >= 3 to be a simplicial complex"
    );
    let id = |i: usize, j: usize| (j % k) * k + (i % k);
    let h = 3f64.sqrt() / 2.0;
    let mut coords = Vec::new();
    for j in 0..k {
        for i in 0..k {
            coords.push(vec![i as f64 + 0.5 * j as f64, h * j as f64]);
        }
    }
    let mut elements = Vec::new();
    for j in 0..k {
        for i in 0..k {
            elements.push(vec![id(i, j), id(i + 1, j), id(i, j + 1)]);
            elements.push(vec![id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    Mesh { elements, coords }
}

/// The five-vertex, five-triangle Möbius band `{i, i+1, i+2} mod 5`.
pub fn mobius_band() -> Vec<Vec<usize>> {
    (0..5).map(|i| vec![i, (i + 1) % 5, (i + 2) % 5]).collect()
}
