//! Oriented regular simplicial complexes with discrete Riemannian metrics.
//!
//! A [`Complex`] is built from a list of oriented `n`-simplices (vertex
//! tuples).  Every `k`-simplex is indexed by its *canonical key*, the sorted
//! vertex tuple, and carries the orientation of that sorted order.  Elements
//! remember the sign of their given tuple relative to the sorted one.
//!
//! A [`DiscreteMetric`] assigns a length to every edge.  Subdividing the
//! complex by circumcentres ([`subdivide`]) yields flags — chains of nested
//! simplices — whose realized volumes aggregate into the dual-cell volumes
//! `|*s|` and neighbourhood volumes `|U(s)|` of [`DualVolumes`].

use std::collections::{BTreeSet, HashMap};

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::manifold::{ManifoldError, ManifoldPoint, ManifoldTag};
use crate::simplex::{self, EdgeLengths, SimplexError};

/// Minimum barycentric coordinate of a circumcentre for well-centredness.
pub const WELL_CENTRED_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ComplexError {
    #[error("a complex needs at least one element")]
    Empty,
    #[error("elements must all have {expected} vertices, found one with {found}")]
    NonUniform { expected: usize, found: usize },
    #[error("element {0:?} repeats a vertex")]
    RepeatedVertex(Vec<usize>),
    #[error("two elements share the vertex set {0:?}")]
    DuplicateElement(Vec<usize>),
    #[error("facet {facet:?} in {count} elements")]
    FacetOverloaded { facet: Vec<usize>, count: usize },
    #[error("vertex {0} lies in no element")]
    IsolatedVertex(usize),
    #[error("vertex id {id} out of range for {count} vertices")]
    VertexOutOfRange { id: usize, count: usize },
    #[error("edge {0:?} has no length")]
    MissingLength(Vec<usize>),
    #[error("{0:?} is not an edge of the complex")]
    UnknownEdge(Vec<usize>),
    #[error("metric has {got} lengths for {expected} edges")]
    MetricSize { expected: usize, got: usize },
    #[error("element {element}: {source}")]
    Element {
        element: usize,
        #[source]
        source: SimplexError,
    },
    #[error("simplex {key:?} is not well-centred (circumcentre coordinate {min_coordinate:e})")]
    NotWellCentred {
        key: Vec<usize>,
        min_coordinate: f64,
    },
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
}

/// An oriented regular simplicial complex.
#[derive(Debug, Clone)]
pub struct Complex {
    n: usize,
    vertex_count: usize,
    elements: Vec<Vec<usize>>,
    element_sign: Vec<i8>,
    /// Canonical keys per degree.  Degree `n` follows element order, the
    /// other degrees are sorted lexicographically.
    simplices: Vec<Vec<Vec<usize>>>,
    index: Vec<HashMap<Vec<usize>, usize>>,
    /// Per element, the global index of each local face, addressed by the
    /// bitmask of local (sorted) vertex positions.
    local_faces: Vec<Vec<usize>>,
    facet_elements: Vec<Vec<usize>>,
}

/// Sign of the permutation sorting `tuple`.
pub fn permutation_sign(tuple: &[usize]) -> i8 {
    let mut sign = 1;
    for i in 0..tuple.len() {
        for j in (i + 1)..tuple.len() {
            if tuple[i] > tuple[j] {
                sign = -sign;
            }
        }
    }
    sign
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// `binom(n, k)` as a float.
pub fn binom(n: usize, k: usize) -> f64 {
    binomial(n, k) as f64
}

fn subset(key: &[usize], mask: usize) -> Vec<usize> {
    key.iter()
        .enumerate()
        .filter(|(a, _)| mask >> a & 1 == 1)
        .map(|(_, &v)| v)
        .collect()
}

/// A sparse integer matrix as sorted `(row, col, value)` triplets.
#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceMatrix {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<(usize, usize, i8)>,
}

impl IncidenceMatrix {
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.rows, self.cols);
        for &(r, c, v) in &self.entries {
            m[(r, c)] += v as f64;
        }
        m
    }
}

impl Complex {
    /// Builds a complex whose vertices are `0..=max id`; every id must be used.
    pub fn new(elements: Vec<Vec<usize>>) -> Result<Self, ComplexError> {
        let count = elements.iter().flatten().max().map_or(0, |m| m + 1);
        Self::with_vertex_count(count, elements)
    }

    /// Builds a complex over `vertex_count` declared vertices.
    pub fn with_vertex_count(
        vertex_count: usize,
        elements: Vec<Vec<usize>>,
    ) -> Result<Self, ComplexError> {
        let first = elements.first().ok_or(ComplexError::Empty)?;
        let size = first.len();
        if size < 2 {
            return Err(ComplexError::NonUniform {
                expected: 2,
                found: size,
            });
        }
        let n = size - 1;
        let mut used = vec![false; vertex_count];
        let mut keys = Vec::with_capacity(elements.len());
        let mut element_sign = Vec::with_capacity(elements.len());
        let mut seen = HashMap::new();
        for e in &elements {
            if e.len() != size {
                return Err(ComplexError::NonUniform {
                    expected: size,
                    found: e.len(),
                });
            }
            for &v in e {
                if v >= vertex_count {
                    return Err(ComplexError::VertexOutOfRange {
                        id: v,
                        count: vertex_count,
                    });
                }
                used[v] = true;
            }
            let mut key = e.clone();
            key.sort_unstable();
            if key.windows(2).any(|w| w[0] == w[1]) {
                return Err(ComplexError::RepeatedVertex(e.clone()));
            }
            if seen.insert(key.clone(), ()).is_some() {
                return Err(ComplexError::DuplicateElement(key));
            }
            element_sign.push(permutation_sign(e));
            keys.push(key);
        }
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(ComplexError::IsolatedVertex(v));
        }

        let full = (1usize << size) - 1;
        let mut sets: Vec<BTreeSet<Vec<usize>>> = vec![BTreeSet::new(); n];
        for key in &keys {
            for mask in 1..full {
                let face = subset(key, mask);
                sets[face.len() - 1].insert(face);
            }
        }
        let mut simplices: Vec<Vec<Vec<usize>>> =
            sets.into_iter().map(|s| s.into_iter().collect()).collect();
        simplices.push(keys.clone());
        let index: Vec<HashMap<Vec<usize>, usize>> = simplices
            .iter()
            .map(|list| {
                list.iter()
                    .enumerate()
                    .map(|(i, k)| (k.clone(), i))
                    .collect()
            })
            .collect();

        let local_faces: Vec<Vec<usize>> = keys
            .iter()
            .map(|key| {
                (0..=full)
                    .map(|mask| {
                        if mask == 0 {
                            usize::MAX
                        } else {
                            let face = subset(key, mask);
                            index[face.len() - 1][&face]
                        }
                    })
                    .collect()
            })
            .collect();

        let mut facet_elements = vec![Vec::new(); simplices[n - 1].len()];
        for (e, faces) in local_faces.iter().enumerate() {
            for a in 0..size {
                facet_elements[faces[full & !(1 << a)]].push(e);
            }
        }
        for (f, els) in facet_elements.iter().enumerate() {
            if els.len() > 2 {
                return Err(ComplexError::FacetOverloaded {
                    facet: simplices[n - 1][f].clone(),
                    count: els.len(),
                });
            }
        }

        Ok(Self {
            n,
            vertex_count,
            elements,
            element_sign,
            simplices,
            index,
            local_faces,
            facet_elements,
        })
    }

    /// Dimension of the elements.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    /// Number of `k`-simplices.
    pub fn count(&self, k: usize) -> usize {
        if k == 0 {
            self.vertex_count
        } else {
            self.simplices[k].len()
        }
    }

    /// Counts `(#K⁰, …, #Kⁿ)`.
    pub fn counts(&self) -> Vec<usize> {
        (0..=self.n).map(|k| self.count(k)).collect()
    }

    /// Canonical keys of the `k`-simplices.
    pub fn simplices(&self, k: usize) -> &[Vec<usize>] {
        &self.simplices[k]
    }

    /// Index of the simplex with the given vertex set (any order).
    pub fn index_of(&self, vertices: &[usize]) -> Option<usize> {
        let mut key = vertices.to_vec();
        key.sort_unstable();
        if key.is_empty() || key.len() > self.n + 1 {
            return None;
        }
        self.index[key.len() - 1].get(&key).copied()
    }

    /// Elements as the oriented tuples they were given in.
    pub fn elements(&self) -> &[Vec<usize>] {
        &self.elements
    }

    /// Sign of element `e`'s tuple relative to its sorted key.
    pub fn element_sign(&self, e: usize) -> i8 {
        self.element_sign[e]
    }

    /// Global index of the face of element `e` selected by `mask` over the
    /// positions of its sorted key.
    pub fn local_face(&self, e: usize, mask: usize) -> usize {
        self.local_faces[e][mask]
    }

    /// Elements containing each `(n−1)`-simplex.
    pub fn facet_elements(&self, f: usize) -> &[usize] {
        &self.facet_elements[f]
    }

    /// Whether each `(n−1)`-simplex is a boundary facet.
    pub fn boundary_facets(&self) -> Vec<bool> {
        self.facet_elements.iter().map(|e| e.len() == 1).collect()
    }

    /// True when no facet is a boundary facet.
    pub fn is_closed(&self) -> bool {
        self.facet_elements.iter().all(|e| e.len() == 2)
    }

    /// Vertices of the boundary subcomplex.
    pub fn boundary_vertices(&self) -> Vec<bool> {
        let mut b = vec![false; self.vertex_count];
        for (f, els) in self.facet_elements.iter().enumerate() {
            if els.len() == 1 {
                for &v in &self.simplices[self.n - 1][f] {
                    b[v] = true;
                }
            }
        }
        b
    }

    /// The boundary subcomplex: all faces of boundary facets, by degree.
    pub fn boundary_subcomplex(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); self.n];
        for (f, els) in self.facet_elements.iter().enumerate() {
            if els.len() != 1 {
                continue;
            }
            let key = &self.simplices[self.n - 1][f];
            for mask in 1..(1usize << key.len()) {
                let face = subset(key, mask);
                out[face.len() - 1].insert(self.index[face.len() - 1][&face]);
            }
        }
        out.into_iter().map(|s| s.into_iter().collect()).collect()
    }

    /// `Σ (−1)ᵏ #Kᵏ`.
    pub fn euler_characteristic(&self) -> i64 {
        (0..=self.n)
            .map(|k| if k % 2 == 0 { 1 } else { -1 } * self.count(k) as i64)
            .sum()
    }

    /// The boundary operator `∂_k : Cₖ → Cₖ₋₁` in canonical orientations,
    /// `∂[p₀…pₖ] = Σ (−1)ⁱ [p₀…p̂ᵢ…pₖ]`.
    pub fn boundary_matrix(&self, k: usize) -> IncidenceMatrix {
        assert!(k >= 1 && k <= self.n, "boundary degree out of range");
        let mut entries = Vec::new();
        for (col, key) in self.simplices[k].iter().enumerate() {
            for i in 0..key.len() {
                let mut face = key.clone();
                face.remove(i);
                let row = self.index[k - 1][&face];
                entries.push((row, col, if i % 2 == 0 { 1 } else { -1 }));
            }
        }
        entries.sort_unstable();
        IncidenceMatrix {
            rows: self.count(k - 1),
            cols: self.count(k),
            entries,
        }
    }

    /// Orientation `±1` induced by element `e` on its facet opposite local
    /// vertex position `a` of the element's sorted key.
    fn induced_facet_sign(&self, e: usize, a: usize) -> i8 {
        self.element_sign[e] * if a % 2 == 0 { 1 } else { -1 }
    }

    /// True iff every interior facet receives opposite orientations from its
    /// two elements.
    pub fn check_orientation(&self) -> bool {
        let full = (1usize << (self.n + 1)) - 1;
        let mut induced: Vec<Vec<i8>> = vec![Vec::new(); self.count(self.n - 1)];
        for e in 0..self.elements.len() {
            for a in 0..=self.n {
                induced[self.local_faces[e][full & !(1 << a)]].push(self.induced_facet_sign(e, a));
            }
        }
        induced.iter().all(|s| s.len() < 2 || s[0] != s[1])
    }

    /// All distinct `k`-flags `a₀ ⊊ … ⊊ aₖ`, each as `(degree, index)` pairs.
    pub fn flags(&self, k: usize) -> Vec<Vec<(usize, usize)>> {
        let mut out = BTreeSet::new();
        let full = (1usize << (self.n + 1)) - 1;
        for e in 0..self.elements.len() {
            let mut chain = Vec::new();
            self.extend_chains(e, full, k + 1, &mut chain, &mut out);
        }
        out.into_iter().collect()
    }

    fn extend_chains(
        &self,
        e: usize,
        full: usize,
        len: usize,
        chain: &mut Vec<usize>,
        out: &mut BTreeSet<Vec<(usize, usize)>>,
    ) {
        if chain.len() == len {
            out.insert(
                chain
                    .iter()
                    .map(|&m| (m.count_ones() as usize - 1, self.local_faces[e][m]))
                    .collect(),
            );
            return;
        }
        let last = chain.last().copied().unwrap_or(0);
        for mask in 1..=full {
            if mask & last == last && mask != last {
                chain.push(mask);
                self.extend_chains(e, full, len, chain, out);
                chain.pop();
            }
        }
    }
}

/// Builds a complex from element tuples.
pub fn build_complex(elements: Vec<Vec<usize>>) -> Result<Complex, ComplexError> {
    Complex::new(elements)
}

/// Edge lengths on `K¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMetric {
    lengths: Vec<f64>,
}

impl DiscreteMetric {
    /// Lengths in the complex's canonical edge order.
    pub fn new(c: &Complex, lengths: Vec<f64>) -> Result<Self, ComplexError> {
        if lengths.len() != c.count(1) {
            return Err(ComplexError::MetricSize {
                expected: c.count(1),
                got: lengths.len(),
            });
        }
        Ok(Self { lengths })
    }

    /// Lengths from `(i, j, ℓ)` records; every edge must be covered.
    pub fn from_records(
        c: &Complex,
        records: &[(usize, usize, f64)],
    ) -> Result<Self, ComplexError> {
        let mut lengths = vec![f64::NAN; c.count(1)];
        for &(i, j, l) in records {
            let e = c
                .index_of(&[i, j])
                .filter(|_| i != j)
                .ok_or(ComplexError::UnknownEdge(vec![i, j]))?;
            lengths[e] = l;
        }
        if let Some(e) = lengths.iter().position(|l| l.is_nan()) {
            return Err(ComplexError::MissingLength(c.simplices(1)[e].clone()));
        }
        Ok(Self { lengths })
    }

    /// Geodesic distances between vertex points of a model manifold.
    pub fn from_points(
        c: &Complex,
        tag: &ManifoldTag,
        points: &[ManifoldPoint],
    ) -> Result<Self, ComplexError> {
        let lengths = c
            .simplices(1)
            .iter()
            .map(|e| tag.dist(&points[e[0]], &points[e[1]]))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { lengths })
    }

    /// Euclidean distances between raw vertex coordinates.
    pub fn from_coordinates(c: &Complex, coords: &[Vec<f64>]) -> Self {
        let lengths = c
            .simplices(1)
            .iter()
            .map(|e| {
                coords[e[0]]
                    .iter()
                    .zip(&coords[e[1]])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        Self { lengths }
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn edge(&self, e: usize) -> f64 {
        self.lengths[e]
    }

    /// Largest edge length `h`.
    pub fn mesh_size(&self) -> f64 {
        self.lengths.iter().copied().fold(0.0, f64::max)
    }

    /// All lengths multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            lengths: self.lengths.iter().map(|l| l * s).collect(),
        }
    }

    /// Edge lengths of a simplex given by its canonical key.
    pub fn simplex_lengths(&self, c: &Complex, key: &[usize]) -> EdgeLengths {
        let k = key.len();
        let m = DMatrix::from_fn(k, k, |a, b| {
            if a == b {
                0.0
            } else {
                self.lengths[c.index_of(&[key[a], key[b]]).expect("edge of the complex")]
            }
        });
        EdgeLengths::from_matrix(m).expect("metric lengths are finite and nonnegative")
    }

    /// Edge lengths of element `e` in its sorted-key vertex order.
    pub fn element_lengths(&self, c: &Complex, e: usize) -> EdgeLengths {
        self.simplex_lengths(c, &c.simplices(c.n())[e])
    }

    /// Metric volume `|s|` of every simplex, with `|vertex| = 1`.
    pub fn volumes(&self, c: &Complex) -> Result<Vec<Vec<f64>>, ComplexError> {
        let mut out = vec![vec![1.0; c.vertex_count()]];
        out.push(self.lengths.clone());
        for k in 2..=c.n() {
            out.push(
                c.simplices(k)
                    .iter()
                    .enumerate()
                    .map(|(i, key)| {
                        simplex::volume(&self.simplex_lengths(c, key))
                            .map_err(|source| ComplexError::Element { element: i, source })
                    })
                    .collect::<Result<_, _>>()?,
            );
        }
        Ok(out)
    }
}

/// Verdict for one element of a metric check.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementVerdict {
    pub psd: bool,
    pub volume: f64,
    pub fullness: f64,
}

/// Result of [`validate_metric`].
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub elements: Vec<ElementVerdict>,
    /// Mesh size, the largest edge.
    pub h: f64,
    pub min_fullness: f64,
    pub valid: bool,
}

/// Checks the Gram matrix of every element for positive semidefiniteness and
/// reports fullness relative to the mesh size.
pub fn validate_metric(c: &Complex, m: &DiscreteMetric) -> MetricReport {
    let h = m.mesh_size();
    let elements: Vec<ElementVerdict> = (0..c.count(c.n()))
        .map(|e| {
            let l = m.element_lengths(c, e);
            let psd = m.lengths.iter().all(|x| *x > 0.0) && simplex::is_realizable(&l);
            let volume = simplex::volume(&l).unwrap_or(0.0);
            ElementVerdict {
                psd,
                volume,
                fullness: if psd { simplex::fullness(&l, h) } else { 0.0 },
            }
        })
        .collect();
    let valid = elements.iter().all(|v| v.psd) && m.lengths.iter().all(|l| *l > 0.0);
    let min_fullness = elements
        .iter()
        .map(|v| v.fullness)
        .fold(f64::INFINITY, f64::min);
    MetricReport {
        elements,
        h,
        min_fullness,
        valid,
    }
}

/// Circumcentric subdivision data of one element.
#[derive(Debug, Clone)]
pub struct ElementFlags {
    /// Realized circumcentre of every local face (indexed by bitmask) in the
    /// element's own coordinates; entry 0 is unused.
    pub centres: Vec<DVector<f64>>,
    /// The `n`-flags as chains of bitmasks `a₀ ⊂ … ⊂ aₙ`.
    pub flags: Vec<Vec<usize>>,
}

impl ElementFlags {
    /// Leg lengths `|c(a_{i+1}) − c(aᵢ)|` of a chain of bitmasks.
    pub fn legs(&self, chain: &[usize]) -> Vec<f64> {
        chain
            .windows(2)
            .map(|w| (&self.centres[w[1]] - &self.centres[w[0]]).norm())
            .collect()
    }

    /// Volume `(1/k!)·∏|legs|` of the realized flag along `chain`.
    pub fn flag_volume(&self, chain: &[usize]) -> f64 {
        let legs = self.legs(chain);
        let fact: f64 = (1..=legs.len()).map(|i| i as f64).product();
        legs.iter().product::<f64>() / fact
    }
}

/// Barycentric subdivision by circumcentres.
#[derive(Debug, Clone)]
pub struct Subdivision {
    /// Circumcentre of every simplex in barycentric coordinates over its
    /// sorted key.
    pub centres: Vec<Vec<DVector<f64>>>,
    pub elements: Vec<ElementFlags>,
    /// Largest `|⟨vᵢ, vⱼ⟩|/(|vᵢ||vⱼ|)` between legs of a common flag.
    pub max_leg_cosine: f64,
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

/// Circumcentres, realized flags and their orthogonality.
pub fn subdivide(c: &Complex, m: &DiscreteMetric) -> Result<Subdivision, ComplexError> {
    let n = c.n();
    let mut centres = vec![vec![DVector::from_element(1, 1.0); c.vertex_count()]];
    for k in 1..=n {
        centres.push(
            c.simplices(k)
                .iter()
                .enumerate()
                .map(|(i, key)| {
                    simplex::circumdata(&m.simplex_lengths(c, key))
                        .map(|d| d.q)
                        .map_err(|source| ComplexError::Element { element: i, source })
                })
                .collect::<Result<_, _>>()?,
        );
    }
    let perms = permutations(n + 1);
    let full = (1usize << (n + 1)) - 1;
    let mut max_cos = 0.0f64;
    let mut elements = Vec::with_capacity(c.count(n));
    for e in 0..c.count(n) {
        let pts = simplex::realize(&m.element_lengths(c, e))
            .map_err(|source| ComplexError::Element { element: e, source })?;
        let mut ctr = vec![DVector::zeros(n); full + 1];
        for (mask, slot) in ctr.iter_mut().enumerate().skip(1) {
            let k = mask.count_ones() as usize - 1;
            let q = &centres[k][c.local_face(e, mask)];
            let positions: Vec<usize> = (0..=n).filter(|a| mask >> a & 1 == 1).collect();
            for (b, &a) in positions.iter().enumerate() {
                *slot += &pts[a] * q[b];
            }
        }
        let flags: Vec<Vec<usize>> = perms
            .iter()
            .map(|p| {
                let mut mask = 0;
                p.iter()
                    .map(|&a| {
                        mask |= 1 << a;
                        mask
                    })
                    .collect()
            })
            .collect();
        for chain in &flags {
            let legs: Vec<DVector<f64>> =
                chain.windows(2).map(|w| &ctr[w[1]] - &ctr[w[0]]).collect();
            for i in 0..legs.len() {
                for j in (i + 1)..legs.len() {
                    let denom = legs[i].norm() * legs[j].norm();
                    if denom > 0.0 {
                        max_cos = max_cos.max(legs[i].dot(&legs[j]).abs() / denom);
                    }
                }
            }
        }
        elements.push(ElementFlags {
            centres: ctr,
            flags,
        });
    }
    Ok(Subdivision {
        centres,
        elements,
        max_leg_cosine: max_cos,
    })
}

/// Primal, dual-cell and neighbourhood volumes.
#[derive(Debug, Clone)]
pub struct DualVolumes {
    pub n: usize,
    /// `|s|` per degree (`|vertex| = 1`).
    pub primal: Vec<Vec<f64>>,
    /// `|*s|` per degree.
    pub dual: Vec<Vec<f64>>,
    /// `|U(s)|` per degree.
    pub neighbourhood: Vec<Vec<f64>>,
    /// `|U(s) ∩ e|` per element and local bitmask.
    pub element_neighbourhood: Vec<Vec<f64>>,
}

impl DualVolumes {
    /// Largest `| |s||*s| − binom(n,k)|U(s)| |` over all simplices.
    pub fn volume_identity_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for k in 0..=self.n {
            for i in 0..self.primal[k].len() {
                let lhs = self.primal[k][i] * self.dual[k][i];
                let rhs = binom(self.n, k) * self.neighbourhood[k][i];
                worst = worst.max((lhs - rhs).abs());
            }
        }
        worst
    }

    /// Total volume of the complex.
    pub fn total_volume(&self) -> f64 {
        self.primal[self.n].iter().sum()
    }
}

/// Aggregates flag volumes into `|*s|` and `|U(s)|`; requires every simplex
/// to be well-centred.
pub fn dual_volumes(
    c: &Complex,
    m: &DiscreteMetric,
    sub: &Subdivision,
) -> Result<DualVolumes, ComplexError> {
    let n = c.n();
    for k in 1..=n {
        for (i, q) in sub.centres[k].iter().enumerate() {
            let min = q.min();
            if min < WELL_CENTRED_TOL {
                return Err(ComplexError::NotWellCentred {
                    key: c.simplices(k)[i].clone(),
                    min_coordinate: min,
                });
            }
        }
    }
    let primal = m.volumes(c)?;
    let mut dual: Vec<Vec<f64>> = (0..=n).map(|k| vec![0.0; c.count(k)]).collect();
    let mut neighbourhood = dual.clone();
    let mut element_neighbourhood = Vec::with_capacity(c.count(n));
    let fact = |k: usize| -> f64 { (1..=k).map(|i| i as f64).product() };
    for (e, ef) in sub.elements.iter().enumerate() {
        let mut local = vec![0.0; 1 << (n + 1)];
        for chain in &ef.flags {
            let legs = ef.legs(chain);
            let vol = legs.iter().product::<f64>() / fact(n);
            for (k, &mask) in chain.iter().enumerate() {
                local[mask] += vol;
                // each upward chain from aₖ is shared by the (k+1)! orderings
                // of aₖ's own vertices
                let upper: f64 = legs[k..].iter().product::<f64>() / fact(n - k);
                dual[k][c.local_face(e, mask)] += upper / fact(k + 1);
            }
        }
        for (mask, v) in local.iter().enumerate().skip(1) {
            let k = mask.count_ones() as usize - 1;
            neighbourhood[k][c.local_face(e, mask)] += v;
        }
        element_neighbourhood.push(local);
    }
    Ok(DualVolumes {
        n,
        primal,
        dual,
        neighbourhood,
        element_neighbourhood,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn equilateral() -> (Complex, DiscreteMetric) {
        let c = Complex::new(vec![vec![0, 1, 2]]).unwrap();
        let m = DiscreteMetric::new(&c, vec![1.0; 3]).unwrap();
        (c, m)
    }

    #[test]
    fn single_triangle_tables() {
        let (c, _) = equilateral();
        assert_eq!(c.counts(), vec![3, 3, 1]);
        assert!(c.boundary_facets().iter().all(|b| *b));
        let d2 = c.boundary_matrix(2).to_dense();
        assert_eq!(d2.column(0).iter().map(|x| x.abs()).sum::<f64>(), 3.0);
        let d1 = c.boundary_matrix(1).to_dense();
        assert!((&d1 * &d2).iter().all(|x| *x == 0.0));
    }

    #[test]
    fn irregular_complexes_are_rejected() {
        let r = Complex::new(vec![vec![0, 1, 2], vec![0, 1, 3], vec![0, 1, 4]]);
        assert!(matches!(
            r,
            Err(ComplexError::FacetOverloaded { count: 3, .. })
        ));
        assert!(matches!(
            Complex::new(vec![vec![0, 1, 1]]),
            Err(ComplexError::RepeatedVertex(_))
        ));
        assert!(matches!(
            Complex::new(vec![vec![0, 1, 2], vec![2, 1, 0]]),
            Err(ComplexError::DuplicateElement(_))
        ));
        assert!(matches!(
            Complex::with_vertex_count(4, vec![vec![0, 1, 2]]),
            Err(ComplexError::IsolatedVertex(3))
        ));
        assert!(matches!(Complex::new(vec![]), Err(ComplexError::Empty)));
    }

    #[test]
    fn triangle_flag_counts() {
        // Barycentric subdivision of a triangle: 7 vertices, 12 edges and
        // 6 triangles, Euler characteristic 1.
        let (c, _) = equilateral();
        let counts: Vec<usize> = (0..3).map(|k| c.flags(k).len()).collect();
        assert_eq!(counts, vec![7, 12, 6]);
    }

    #[test]
    fn equilateral_dual_volumes() {
        let (c, m) = equilateral();
        let sub = subdivide(&c, &m).unwrap();
        let flag = 1.0 / (8.0 * 3f64.sqrt());
        for ef in &sub.elements {
            for chain in &ef.flags {
                assert_relative_eq!(ef.flag_volume(chain), flag, epsilon = 1e-15);
            }
        }
        let dv = dual_volumes(&c, &m, &sub).unwrap();
        for i in 0..3 {
            assert_relative_eq!(dv.primal[1][i], 1.0);
            assert_relative_eq!(dv.dual[1][i], 1.0 / (2.0 * 3f64.sqrt()), epsilon = 1e-15);
            assert_relative_eq!(
                dv.neighbourhood[1][i],
                1.0 / (4.0 * 3f64.sqrt()),
                epsilon = 1e-15
            );
        }
        assert_relative_eq!(
            dv.neighbourhood[0].iter().sum::<f64>(),
            3f64.sqrt() / 4.0,
            epsilon = 1e-15
        );
        assert!(dv.volume_identity_residual() < 1e-15);
    }

    #[test]
    fn right_triangle_is_not_well_centred() {
        let c = Complex::new(vec![vec![0, 1, 2]]).unwrap();
        let m = DiscreteMetric::from_records(&c, &[(0, 1, 1.0), (0, 2, 1.0), (1, 2, 2f64.sqrt())])
            .unwrap();
        let sub = subdivide(&c, &m).unwrap();
        assert!(matches!(
            dual_volumes(&c, &m, &sub),
            Err(ComplexError::NotWellCentred { .. })
        ));
    }

    #[test]
    fn metric_validation() {
        let (c, _) = equilateral();
        let bad =
            DiscreteMetric::from_records(&c, &[(0, 1, 1.0), (0, 2, 1.0), (1, 2, 3.0)]).unwrap();
        assert!(!validate_metric(&c, &bad).valid);
        let good = DiscreteMetric::new(&c, vec![1.0; 3]).unwrap();
        let r = validate_metric(&c, &good);
        assert!(r.valid);
        assert_relative_eq!(r.min_fullness, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn orientation_of_two_triangles() {
        let good = Complex::new(vec![vec![0, 1, 2], vec![0, 2, 3]]).unwrap();
        assert!(good.check_orientation());
        let bad = Complex::new(vec![vec![0, 1, 2], vec![0, 3, 2]]).unwrap();
        assert!(!bad.check_orientation());
    }

    #[test]
    fn permutation_signs() {
        assert_eq!(permutation_sign(&[0, 1, 2]), 1);
        assert_eq!(permutation_sign(&[1, 0, 2]), -1);
        assert_eq!(permutation_sign(&[2, 0, 1]), 1);
    }
}
