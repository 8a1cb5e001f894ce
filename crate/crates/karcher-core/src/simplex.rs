//! Euclidean geometry of a single simplex known only through its edge lengths.
//!
//! Everything here is intrinsic: the Gram matrix `C_ij = ½(ℓ₀ᵢ² + ℓ₀ⱼ² − ℓᵢⱼ²)`
//! and the bordered Cayley–Menger matrix
//!
//! ```text
//! M₊ = [ 0    −½·1ᵀ ]        E_ij = −½ ℓᵢⱼ²
//!      [ −½·1   E   ]
//! ```
//!
//! determine volume, circumcentre and the cotangent matrix `Q^{ij} = vⁱ·vʲ`
//! of barycentric-coordinate gradients.  `M₊⁻¹` has the block form
//! `[[4r², −2qᵀ], [−2q, Q]]` with `r` the circumradius and `q` the barycentric
//! coordinates of the circumcentre.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Relative volume threshold below which a simplex counts as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimplexError {
    #[error("edge lengths are not realizable by a Euclidean simplex (not a discrete metric)")]
    NotRealizable,
    #[error("degenerate simplex (volume {volume:e} at diameter {diameter:e})")]
    Degenerate { volume: f64, diameter: f64 },
    #[error("invalid edge-length data: {0}")]
    Invalid(String),
}

/// Symmetric table of edge lengths of an `n`-simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeLengths {
    n: usize,
    len: DMatrix<f64>,
}

/// The `n×n` Gram matrix of edge vectors from vertex 0.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix(pub DMatrix<f64>);

/// The bordered `(n+2)×(n+2)` Cayley–Menger matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CayleyMenger(pub DMatrix<f64>);

/// Circumradius, barycentric circumcentre and cotangent matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CircumData {
    pub r: f64,
    pub q: DVector<f64>,
    /// `(n+1)×(n+1)` matrix `Q^{ij} = vⁱ·vʲ` with vanishing row sums.
    pub cot: DMatrix<f64>,
}

/// Summary of the geometry of one simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexReport {
    pub volume: f64,
    pub fullness: f64,
    pub diameter: f64,
    pub circumradius: f64,
    pub circumcentre: DVector<f64>,
    pub cot: DMatrix<f64>,
}

/// Outcome of comparing two edge-length assignments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationCheck {
    pub realizable: bool,
    /// `sup_v |(g − ḡ)(v,v)| / g(v,v)`, exact generalized eigenvalue bound.
    pub deviation: f64,
    pub holds: bool,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

impl EdgeLengths {
    /// Builds from a full symmetric matrix of lengths.
    pub fn from_matrix(len: DMatrix<f64>) -> Result<Self, SimplexError> {
        let k = len.nrows();
        if k == 0 || len.ncols() != k {
            return Err(SimplexError::Invalid(
                "length table must be square and nonempty".into(),
            ));
        }
        for i in 0..k {
            if len[(i, i)] != 0.0 {
                return Err(SimplexError::Invalid("nonzero diagonal".into()));
            }
            for j in 0..k {
                let (a, b) = (len[(i, j)], len[(j, i)]);
                if !a.is_finite() || a < 0.0 {
                    return Err(SimplexError::Invalid(format!("bad length {a}")));
                }
                if a != b {
                    return Err(SimplexError::Invalid("asymmetric length table".into()));
                }
            }
        }
        Ok(Self { n: k - 1, len })
    }

    /// Builds from the lengths of edges `(i,j)`, `i<j`, in lexicographic order.
    pub fn from_pairs(n: usize, lengths: &[f64]) -> Result<Self, SimplexError> {
        if lengths.len() != n * (n + 1) / 2 {
            return Err(SimplexError::Invalid(format!(
                "an {n}-simplex has {} edges, got {}",
                n * (n + 1) / 2,
                lengths.len()
            )));
        }
        let mut m = DMatrix::zeros(n + 1, n + 1);
        let mut it = lengths.iter();
        for i in 0..=n {
            for j in (i + 1)..=n {
                let l = *it.next().unwrap();
                m[(i, j)] = l;
                m[(j, i)] = l;
            }
        }
        Self::from_matrix(m)
    }

    /// Lengths of the simplex spanned by explicit Euclidean points.
    pub fn from_points(points: &[DVector<f64>]) -> Result<Self, SimplexError> {
        let k = points.len();
        Self::from_matrix(DMatrix::from_fn(k, k, |i, j| {
            (&points[i] - &points[j]).norm()
        }))
    }

    /// Equilateral simplex with the given edge length.
    pub fn regular(n: usize, edge: f64) -> Self {
        let len = DMatrix::from_fn(n + 1, n + 1, |i, j| if i == j { 0.0 } else { edge });
        Self { n, len }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.len[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.len
    }

    /// Largest edge length.
    pub fn diameter(&self) -> f64 {
        self.len.max()
    }

    /// Lengths of the face spanned by the given local vertices.
    pub fn face(&self, vertices: &[usize]) -> EdgeLengths {
        let k = vertices.len();
        let len = DMatrix::from_fn(k, k, |a, b| self.len[(vertices[a], vertices[b])]);
        EdgeLengths { n: k - 1, len }
    }

    /// All lengths multiplied by `s`.
    pub fn scaled(&self, s: f64) -> EdgeLengths {
        EdgeLengths {
            n: self.n,
            len: &self.len * s,
        }
    }
}

/// Gram matrix by the cosine law.
pub fn gram_from_lengths(l: &EdgeLengths) -> GramMatrix {
    let n = l.n;
    GramMatrix(DMatrix::from_fn(n, n, |a, b| {
        let (i, j) = (a + 1, b + 1);
        0.5 * (l.len[(0, i)].powi(2) + l.len[(0, j)].powi(2) - l.len[(i, j)].powi(2))
    }))
}

/// The bordered Cayley–Menger matrix.
pub fn cayley_menger(l: &EdgeLengths) -> CayleyMenger {
    let k = l.n + 2;
    CayleyMenger(DMatrix::from_fn(k, k, |a, b| match (a, b) {
        (0, 0) => 0.0,
        (0, _) | (_, 0) => -0.5,
        (i, j) => -0.5 * l.len[(i - 1, j - 1)].powi(2),
    }))
}

/// `σₙ`, the volume of the regular `n`-simplex with unit edges.
pub fn sigma_n(n: usize) -> f64 {
    ((n + 1) as f64).sqrt() / (2f64.powf(n as f64 / 2.0) * factorial(n))
}

/// `α̲ₙ = n!·σₙ·n^{1−n}`, the eigenvalue constant for fullness-bounded simplices.
pub fn alpha_lower(n: usize) -> f64 {
    factorial(n) * sigma_n(n) * (n as f64).powi(1 - n as i32)
}

/// True iff the Gram matrix is positive semidefinite up to a scale-aware
/// tolerance.
pub fn is_realizable(l: &EdgeLengths) -> bool {
    if l.n == 0 {
        return true;
    }
    let h2 = l.diameter().powi(2).max(f64::MIN_POSITIVE);
    let c = gram_from_lengths(l).0;
    c.symmetric_eigenvalues().iter().all(|&e| e >= -1e-12 * h2)
}

/// Volume from the Cayley–Menger determinant, `(2/n!)·√(−det M₊)`.
pub fn volume(l: &EdgeLengths) -> Result<f64, SimplexError> {
    if l.n == 0 {
        return Ok(1.0);
    }
    if !is_realizable(l) {
        return Err(SimplexError::NotRealizable);
    }
    let n = l.n;
    let h = l.diameter().max(f64::MIN_POSITIVE);
    let neg_det = -cayley_menger(l).0.determinant();
    // −det M₊ = (n!·vol/2)², which scales like h^{2n}
    if neg_det < -1e-14 * h.powi(2 * n as i32) {
        return Err(SimplexError::NotRealizable);
    }
    Ok(2.0 / factorial(n) * neg_det.max(0.0).sqrt())
}

/// Volume through the Gram determinant, `(1/n!)·√det C`.
pub fn volume_from_gram(l: &EdgeLengths) -> f64 {
    if l.n == 0 {
        return 1.0;
    }
    gram_from_lengths(l).0.determinant().max(0.0).sqrt() / factorial(l.n)
}

/// Fullness `ϑ = vol/(hⁿσₙ)`.
pub fn fullness(l: &EdgeLengths, h: f64) -> f64 {
    match volume(l) {
        Ok(v) if l.n > 0 && h > 0.0 => v / (h.powi(l.n as i32) * sigma_n(l.n)),
        Ok(_) => 1.0,
        Err(_) => 0.0,
    }
}

/// True when the volume is below `1e-12·hⁿ` or the lengths are not realizable.
pub fn is_degenerate(l: &EdgeLengths) -> bool {
    match volume(l) {
        Ok(v) => l.n > 0 && v < DEGENERACY_TOL * l.diameter().powi(l.n as i32),
        Err(_) => true,
    }
}

fn require_nondegenerate(l: &EdgeLengths) -> Result<f64, SimplexError> {
    let v = volume(l)?;
    if l.n > 0 && v < DEGENERACY_TOL * l.diameter().powi(l.n as i32) {
        return Err(SimplexError::Degenerate {
            volume: v,
            diameter: l.diameter(),
        });
    }
    Ok(v)
}

/// Circumradius, circumcentre and cotangent matrix read off `M₊⁻¹`.
pub fn circumdata(l: &EdgeLengths) -> Result<CircumData, SimplexError> {
    require_nondegenerate(l)?;
    if l.n == 0 {
        return Ok(CircumData {
            r: 0.0,
            q: DVector::from_element(1, 1.0),
            cot: DMatrix::zeros(1, 1),
        });
    }
    let inv = cayley_menger(l)
        .0
        .try_inverse()
        .ok_or(SimplexError::Degenerate {
            volume: 0.0,
            diameter: l.diameter(),
        })?;
    let k = l.n + 1;
    let r = inv[(0, 0)].max(0.0).sqrt() / 2.0;
    let q = DVector::from_fn(k, |i, _| -0.5 * inv[(i + 1, 0)]);
    let cot = inv.view((1, 1), (k, k)).into_owned();
    Ok(CircumData { r, q, cot })
}

/// The cotangent matrix `Q^{ij} = vⁱ·vʲ`.
pub fn cotangent_matrix(l: &EdgeLengths) -> Result<DMatrix<f64>, SimplexError> {
    Ok(circumdata(l)?.cot)
}

/// `cot α`, where `α` is the angle at the vertex of a triangle opposite the
/// edge `(i,j)`, from the cosine rule.  For the standard definitions this
/// equals `−2·|ijk|·(vⁱ·vʲ)`.
pub fn cotan_weight(l: &EdgeLengths, i: usize, j: usize) -> Result<f64, SimplexError> {
    if l.n != 2 {
        return Err(SimplexError::Invalid(
            "cotangent weights need a triangle".into(),
        ));
    }
    if i == j || i > 2 || j > 2 {
        return Err(SimplexError::Invalid(format!("({i},{j}) is not an edge")));
    }
    let area = require_nondegenerate(l)?;
    let k = 3 - i - j;
    let (a, b, c) = (l.get(i, k), l.get(j, k), l.get(i, j));
    Ok((a * a + b * b - c * c) / (4.0 * area))
}

/// `|vⁱ|`, the lengths of the barycentric-coordinate gradients.
pub fn gradient_norms(l: &EdgeLengths) -> Result<Vec<f64>, SimplexError> {
    let q = cotangent_matrix(l)?;
    Ok((0..=l.n).map(|i| q[(i, i)].max(0.0).sqrt()).collect())
}

/// Heights `hᵢ` of each vertex over its opposite facet.
pub fn heights(l: &EdgeLengths) -> Result<Vec<f64>, SimplexError> {
    let v = require_nondegenerate(l)?;
    let n = l.n;
    (0..=n)
        .map(|i| {
            let facet: Vec<usize> = (0..=n).filter(|&j| j != i).collect();
            let fv = volume(&l.face(&facet))?;
            Ok(n as f64 * v / fv)
        })
        .collect()
}

/// Full report; `h` for the fullness is the simplex's own diameter.
pub fn report(l: &EdgeLengths) -> Result<SimplexReport, SimplexError> {
    let vol = require_nondegenerate(l)?;
    let cd = circumdata(l)?;
    Ok(SimplexReport {
        volume: vol,
        fullness: fullness(l, l.diameter()),
        diameter: l.diameter(),
        circumradius: cd.r,
        circumcentre: cd.q,
        cot: cd.cot,
    })
}

/// Vertex coordinates in `ℝⁿ` realizing the lengths (vertex 0 at the origin),
/// from a Cholesky factor of the Gram matrix.
pub fn realize(l: &EdgeLengths) -> Result<Vec<DVector<f64>>, SimplexError> {
    require_nondegenerate(l)?;
    let n = l.n;
    let chol = gram_from_lengths(l)
        .0
        .cholesky()
        .ok_or(SimplexError::NotRealizable)?;
    let lower = chol.l();
    let mut pts = vec![DVector::zeros(n)];
    for i in 0..n {
        pts.push(lower.row(i).transpose());
    }
    Ok(pts)
}

/// Compares the flat metrics induced by `ℓ` and `ℓ̄`: the deviation is the
/// largest `|(g−ḡ)(v,v)|/g(v,v)`, computed exactly as a generalized
/// eigenvalue of the two Gram matrices.
pub fn perturb_lengths_check(l: &EdgeLengths, lbar: &EdgeLengths, eps: f64) -> PerturbationCheck {
    let fail = PerturbationCheck {
        realizable: false,
        deviation: f64::INFINITY,
        holds: false,
    };
    if l.n != lbar.n || is_degenerate(l) {
        return fail;
    }
    if is_degenerate(lbar) {
        return fail;
    }
    let c = gram_from_lengths(l).0;
    let cbar = gram_from_lengths(lbar).0;
    let Some(chol) = c.clone().cholesky() else {
        return fail;
    };
    let linv = chol
        .l()
        .try_inverse()
        .expect("Cholesky factor is invertible");
    let sym = &linv * (&c - &cbar) * linv.transpose();
    let deviation = sym
        .symmetric_eigenvalues()
        .iter()
        .fold(0.0f64, |m, e| m.max(e.abs()));
    PerturbationCheck {
        realizable: true,
        deviation,
        holds: deviation <= eps,
    }
}

/// Edge-length window `(2/3)·ε·n⁻¹·α̲ₙ²·ϑ²` inside which a relative length
/// perturbation keeps the metric within `ε`.
pub fn perturbation_window(n: usize, eps: f64, theta: f64) -> f64 {
    2.0 / 3.0 * eps / n as f64 * alpha_lower(n).powi(2) * theta * theta
}
