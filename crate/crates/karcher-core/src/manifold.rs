//! Closed-form Riemannian kernels for the four model manifolds.
//!
//! Points and tangent vectors are carried in ambient coordinates:
//!
//! - Euclidean space `ℝᵐ` and the flat torus `ℝᵐ/ℤᵐ` use `m` coordinates
//!   (torus points are kept as canonical representatives in `[0,1)ᵐ`),
//! - the unit sphere `Sᵐ ⊂ ℝᵐ⁺¹` uses the Euclidean embedding,
//! - hyperbolic space `Hᵐ` uses the upper sheet of the hyperboloid
//!   `⟨p,p⟩_L = −1`, `p₀ > 0`, with the Minkowski form
//!   `⟨x,y⟩_L = −x₀y₀ + Σ xᵢyᵢ`.
//!
//! Every kernel is a pure function of its arguments, so all of this is safe
//! to call concurrently.

use thiserror::Error;

/// Tolerance for the point and tangent-space invariants.
pub const INVARIANT_TOL: f64 = 1e-10;

/// `⟨p,q⟩ ≤ −1 + ANTIPODAL_TOL` on the sphere counts as the cut locus.
pub const ANTIPODAL_TOL: f64 = 1e-12;

/// Errors raised by the manifold kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ManifoldError {
    #[error("manifold tag mismatch: {0:?} vs {1:?}")]
    TagMismatch(ManifoldTag, ManifoldTag),
    #[error("expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(
        "ambient dimension {ambient} is incompatible with a {kind:?} of dimension {intrinsic}"
    )]
    BadTag {
        kind: ManifoldKind,
        ambient: usize,
        intrinsic: usize,
    },
    #[error("point violates the {0:?} invariant")]
    InvalidPoint(ManifoldKind),
    #[error("vector is not tangent at its base point")]
    NotTangent,
    #[error("tangent vector is based at a different point")]
    BaseMismatch,
    #[error("point lies on or beyond the cut locus (distance {distance})")]
    CutLocus { distance: f64 },
}

/// The four supported model geometries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ManifoldKind {
    Euclidean,
    Sphere,
    Hyperbolic,
    FlatTorus,
}

impl ManifoldKind {
    /// Parses the names used by the file formats and the CLI.
    pub fn parse(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "euclidean" | "flat" | "r" => Some(Self::Euclidean),
            "sphere" | "s" => Some(Self::Sphere),
            "hyperbolic" | "h" => Some(Self::Hyperbolic),
            "flat_torus" | "torus" | "t" => Some(Self::FlatTorus),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Euclidean => "euclidean",
            Self::Sphere => "sphere",
            Self::Hyperbolic => "hyperbolic",
            Self::FlatTorus => "flat_torus",
        }
    }
}

/// A model manifold together with its intrinsic dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ManifoldTag {
    kind: ManifoldKind,
    intrinsic_dim: usize,
}

/// Curvature and radius constants of a model manifold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureBounds {
    /// Bound on the curvature tensor `‖R‖`.
    pub c0: f64,
    /// Bound on its covariant derivative `‖∇R‖`.
    pub c1: f64,
    /// Injectivity radius (`+∞` allowed).
    pub inj: f64,
    /// Convexity radius (`+∞` allowed).
    pub cvr: f64,
}

/// A point in ambient coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldPoint {
    tag: ManifoldTag,
    coords: Vec<f64>,
}

/// A tangent vector in ambient coordinates, attached to its base point.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    base: ManifoldPoint,
    vec: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn minkowski(a: &[f64], b: &[f64]) -> f64 {
    -a[0] * b[0] + dot(&a[1..], &b[1..])
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Wraps a torus coordinate difference into `(−1/2, 1/2]`.
fn wrap_difference(d: f64) -> f64 {
    d - (d - 0.5).ceil()
}

/// Reduces a coordinate into `[0, 1)`.
fn wrap_unit(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// `sin(x)/x`, accurate near zero.
fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// `sinh(x)/x`, accurate near zero.
fn sinhc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 + x * x / 6.0
    } else {
        x.sinh() / x
    }
}

impl ManifoldTag {
    /// Builds a tag from a kind and intrinsic dimension `m ≥ 1`.
    pub fn new(kind: ManifoldKind, intrinsic_dim: usize) -> Self {
        assert!(intrinsic_dim >= 1, "manifold dimension must be positive");
        Self {
            kind,
            intrinsic_dim,
        }
    }

    /// Builds a tag from an ambient dimension, checking the model's
    /// ambient/intrinsic relation.
    pub fn from_ambient(kind: ManifoldKind, ambient: usize) -> Result<Self, ManifoldError> {
        let intrinsic = match kind {
            ManifoldKind::Sphere | ManifoldKind::Hyperbolic => ambient.checked_sub(1),
            ManifoldKind::Euclidean | ManifoldKind::FlatTorus => Some(ambient),
        };
        match intrinsic {
            Some(m) if m >= 1 => Ok(Self::new(kind, m)),
            _ => Err(ManifoldError::BadTag {
                kind,
                ambient,
                intrinsic: intrinsic.unwrap_or(0),
            }),
        }
    }

    pub fn euclidean(m: usize) -> Self {
        Self::new(ManifoldKind::Euclidean, m)
    }

    pub fn sphere(m: usize) -> Self {
        Self::new(ManifoldKind::Sphere, m)
    }

    pub fn hyperbolic(m: usize) -> Self {
        Self::new(ManifoldKind::Hyperbolic, m)
    }

    pub fn torus(m: usize) -> Self {
        Self::new(ManifoldKind::FlatTorus, m)
    }

    pub fn kind(&self) -> ManifoldKind {
        self.kind
    }

    pub fn intrinsic_dim(&self) -> usize {
        self.intrinsic_dim
    }

    pub fn ambient_dim(&self) -> usize {
        match self.kind {
            ManifoldKind::Sphere | ManifoldKind::Hyperbolic => self.intrinsic_dim + 1,
            ManifoldKind::Euclidean | ManifoldKind::FlatTorus => self.intrinsic_dim,
        }
    }

    /// Curvature constants; the convexity radius of the sphere is the
    /// `½ min{π/√C₀, inj}` bound, the torus uses half its injectivity radius.
    pub fn curvature_bounds(&self) -> CurvatureBounds {
        use std::f64::consts::PI;
        match self.kind {
            ManifoldKind::Euclidean => CurvatureBounds {
                c0: 0.0,
                c1: 0.0,
                inj: f64::INFINITY,
                cvr: f64::INFINITY,
            },
            ManifoldKind::Sphere => CurvatureBounds {
                c0: 1.0,
                c1: 0.0,
                inj: PI,
                cvr: PI / 2.0,
            },
            ManifoldKind::Hyperbolic => CurvatureBounds {
                c0: 1.0,
                c1: 0.0,
                inj: f64::INFINITY,
                cvr: f64::INFINITY,
            },
            ManifoldKind::FlatTorus => CurvatureBounds {
                c0: 0.0,
                c1: 0.0,
                inj: 0.5,
                cvr: 0.25,
            },
        }
    }

    fn check_len(&self, len: usize) -> Result<(), ManifoldError> {
        if len == self.ambient_dim() {
            Ok(())
        } else {
            Err(ManifoldError::DimensionMismatch {
                expected: self.ambient_dim(),
                got: len,
            })
        }
    }

    fn check_same(&self, other: &ManifoldTag) -> Result<(), ManifoldError> {
        if self == other {
            Ok(())
        } else {
            Err(ManifoldError::TagMismatch(*self, *other))
        }
    }

    /// Validates coordinates as a point of this manifold.  Torus coordinates
    /// are reduced to their canonical representative.
    pub fn point(&self, coords: Vec<f64>) -> Result<ManifoldPoint, ManifoldError> {
        self.check_len(coords.len())?;
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(ManifoldError::InvalidPoint(self.kind));
        }
        let coords = match self.kind {
            ManifoldKind::Euclidean => coords,
            ManifoldKind::Sphere => {
                if (norm(&coords) - 1.0).abs() > INVARIANT_TOL {
                    return Err(ManifoldError::InvalidPoint(self.kind));
                }
                coords
            }
            ManifoldKind::Hyperbolic => {
                if (minkowski(&coords, &coords) + 1.0).abs()
                    > INVARIANT_TOL * coords[0].max(1.0).powi(2)
                    || coords[0] <= 0.0
                {
                    return Err(ManifoldError::InvalidPoint(self.kind));
                }
                coords
            }
            ManifoldKind::FlatTorus => coords.into_iter().map(wrap_unit).collect(),
        };
        Ok(ManifoldPoint { tag: *self, coords })
    }

    /// Projects arbitrary ambient coordinates onto the manifold: normalizes
    /// onto the sphere, lifts onto the hyperboloid from the spatial part,
    /// wraps onto the torus.
    pub fn project(&self, mut coords: Vec<f64>) -> Result<ManifoldPoint, ManifoldError> {
        self.check_len(coords.len())?;
        match self.kind {
            ManifoldKind::Euclidean => {}
            ManifoldKind::Sphere => {
                let r = norm(&coords);
                if r == 0.0 || !r.is_finite() {
                    return Err(ManifoldError::InvalidPoint(self.kind));
                }
                coords.iter_mut().for_each(|c| *c /= r);
            }
            ManifoldKind::Hyperbolic => {
                coords[0] = (1.0 + dot(&coords[1..], &coords[1..])).sqrt();
            }
            ManifoldKind::FlatTorus => coords.iter_mut().for_each(|c| *c = wrap_unit(*c)),
        }
        Ok(ManifoldPoint { tag: *self, coords })
    }

    /// Builds a tangent vector at `base`, checking tangency.
    pub fn tangent(
        &self,
        base: &ManifoldPoint,
        vec: Vec<f64>,
    ) -> Result<TangentVector, ManifoldError> {
        self.check_same(&base.tag)?;
        self.check_len(vec.len())?;
        let scale = norm(&vec).max(1.0);
        let violation = match self.kind {
            ManifoldKind::Sphere => dot(&vec, &base.coords).abs(),
            ManifoldKind::Hyperbolic => {
                minkowski(&vec, &base.coords).abs() / base.coords[0].max(1.0)
            }
            _ => 0.0,
        };
        if violation > INVARIANT_TOL * scale {
            return Err(ManifoldError::NotTangent);
        }
        Ok(TangentVector {
            base: base.clone(),
            vec,
        })
    }

    /// Projects an ambient vector onto the tangent space at `base`.
    pub fn project_tangent(
        &self,
        base: &ManifoldPoint,
        mut vec: Vec<f64>,
    ) -> Result<TangentVector, ManifoldError> {
        self.check_same(&base.tag)?;
        self.check_len(vec.len())?;
        match self.kind {
            ManifoldKind::Sphere => {
                let c = dot(&vec, &base.coords);
                vec.iter_mut()
                    .zip(&base.coords)
                    .for_each(|(v, p)| *v -= c * p);
            }
            ManifoldKind::Hyperbolic => {
                let c = minkowski(&vec, &base.coords);
                vec.iter_mut()
                    .zip(&base.coords)
                    .for_each(|(v, p)| *v += c * p);
            }
            _ => {}
        }
        Ok(TangentVector {
            base: base.clone(),
            vec,
        })
    }

    /// Zero vector at `p`.
    pub fn zero(&self, p: &ManifoldPoint) -> TangentVector {
        TangentVector {
            base: p.clone(),
            vec: vec![0.0; self.ambient_dim()],
        }
    }

    /// Riemannian inner product of two ambient tangent vectors at a common
    /// point (the Lorentz form for the hyperboloid, Euclidean otherwise).
    pub fn inner(&self, v: &[f64], w: &[f64]) -> f64 {
        match self.kind {
            ManifoldKind::Hyperbolic => minkowski(v, w),
            _ => dot(v, w),
        }
    }

    /// Riemannian norm of an ambient tangent vector.
    pub fn norm(&self, v: &[f64]) -> f64 {
        self.inner(v, v).max(0.0).sqrt()
    }

    /// Geodesic distance.
    pub fn dist(&self, p: &ManifoldPoint, q: &ManifoldPoint) -> Result<f64, ManifoldError> {
        self.check_same(&p.tag)?;
        self.check_same(&q.tag)?;
        Ok(self.dist_raw(&p.coords, &q.coords))
    }

    /// Geodesic distance between raw coordinate slices of this manifold.
    pub fn dist_raw(&self, p: &[f64], q: &[f64]) -> f64 {
        match self.kind {
            ManifoldKind::Euclidean => p
                .iter()
                .zip(q)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
            ManifoldKind::Sphere => {
                let c = dot(p, q);
                let s = p
                    .iter()
                    .zip(q)
                    .map(|(a, b)| (b - c * a) * (b - c * a))
                    .sum::<f64>()
                    .sqrt();
                s.atan2(c)
            }
            ManifoldKind::Hyperbolic => {
                let diff: Vec<f64> = p.iter().zip(q).map(|(a, b)| a - b).collect();
                let half = minkowski(&diff, &diff).max(0.0).sqrt() / 2.0;
                2.0 * half.asinh()
            }
            ManifoldKind::FlatTorus => p
                .iter()
                .zip(q)
                .map(|(a, b)| wrap_difference(b - a).powi(2))
                .sum::<f64>()
                .sqrt(),
        }
    }

    /// Raw logarithm `log_p q` in ambient coordinates.
    pub fn log_raw(&self, p: &[f64], q: &[f64]) -> Result<Vec<f64>, ManifoldError> {
        match self.kind {
            ManifoldKind::Euclidean => Ok(q.iter().zip(p).map(|(b, a)| b - a).collect()),
            ManifoldKind::FlatTorus => Ok(q
                .iter()
                .zip(p)
                .map(|(b, a)| wrap_difference(b - a))
                .collect()),
            ManifoldKind::Sphere => {
                let c = dot(p, q);
                if c <= -1.0 + ANTIPODAL_TOL {
                    return Err(ManifoldError::CutLocus {
                        distance: self.dist_raw(p, q),
                    });
                }
                let w: Vec<f64> = q.iter().zip(p).map(|(b, a)| b - c * a).collect();
                let s = norm(&w);
                let theta = s.atan2(c);
                // θ / sin θ, with sin θ = |w|
                let factor = if s < 1e-300 { 1.0 } else { 1.0 / sinc(theta) };
                Ok(w.into_iter().map(|x| x * factor).collect())
            }
            ManifoldKind::Hyperbolic => {
                let c = minkowski(p, q);
                let w: Vec<f64> = q.iter().zip(p).map(|(b, a)| b + c * a).collect();
                let d = self.dist_raw(p, q);
                let factor = 1.0 / sinhc(d);
                Ok(w.into_iter().map(|x| x * factor).collect())
            }
        }
    }

    /// Raw exponential `exp_p v` in ambient coordinates, renormalized onto
    /// the model.
    pub fn exp_raw(&self, p: &[f64], v: &[f64]) -> Vec<f64> {
        match self.kind {
            ManifoldKind::Euclidean => p.iter().zip(v).map(|(a, b)| a + b).collect(),
            ManifoldKind::FlatTorus => p.iter().zip(v).map(|(a, b)| wrap_unit(a + b)).collect(),
            ManifoldKind::Sphere => {
                let t = norm(v);
                let (c, s) = (t.cos(), sinc(t));
                let mut x: Vec<f64> = p.iter().zip(v).map(|(a, b)| c * a + s * b).collect();
                let r = norm(&x);
                x.iter_mut().for_each(|y| *y /= r);
                x
            }
            ManifoldKind::Hyperbolic => {
                let t = minkowski(v, v).max(0.0).sqrt();
                let (c, s) = (t.cosh(), sinhc(t));
                let mut x: Vec<f64> = p.iter().zip(v).map(|(a, b)| c * a + s * b).collect();
                let r = (-minkowski(&x, &x)).sqrt();
                x.iter_mut().for_each(|y| *y /= r);
                if x[0] < 0.0 {
                    x.iter_mut().for_each(|y| *y = -*y);
                }
                x
            }
        }
    }

    /// Raw parallel transport of `v` from `p` to `q` along the unique
    /// shortest geodesic.
    pub fn partrans_raw(&self, p: &[f64], q: &[f64], v: &[f64]) -> Result<Vec<f64>, ManifoldError> {
        match self.kind {
            ManifoldKind::Euclidean | ManifoldKind::FlatTorus => Ok(v.to_vec()),
            ManifoldKind::Sphere => {
                let c = dot(p, q);
                if c <= -1.0 + ANTIPODAL_TOL {
                    return Err(ManifoldError::CutLocus {
                        distance: self.dist_raw(p, q),
                    });
                }
                let k = dot(q, v) / (1.0 + c);
                Ok(v.iter()
                    .zip(p.iter().zip(q))
                    .map(|(x, (a, b))| x - k * (a + b))
                    .collect())
            }
            ManifoldKind::Hyperbolic => {
                let c = minkowski(p, q);
                let k = minkowski(q, v) / (1.0 - c);
                Ok(v.iter()
                    .zip(p.iter().zip(q))
                    .map(|(x, (a, b))| x + k * (a + b))
                    .collect())
            }
        }
    }

    /// `log_p q`: the initial velocity of the shortest geodesic from `p` to `q`
    /// reaching `q` at time 1.
    pub fn log(
        &self,
        p: &ManifoldPoint,
        q: &ManifoldPoint,
    ) -> Result<TangentVector, ManifoldError> {
        self.check_same(&p.tag)?;
        self.check_same(&q.tag)?;
        let vec = self.log_raw(&p.coords, &q.coords)?;
        Ok(TangentVector {
            base: p.clone(),
            vec,
        })
    }

    /// `exp_p v` for a tangent vector `v` based at `p`.
    pub fn exp(
        &self,
        p: &ManifoldPoint,
        v: &TangentVector,
    ) -> Result<ManifoldPoint, ManifoldError> {
        self.check_same(&p.tag)?;
        self.check_same(&v.base.tag)?;
        if !self.same_point(p, &v.base) {
            return Err(ManifoldError::BaseMismatch);
        }
        Ok(ManifoldPoint {
            tag: *self,
            coords: self.exp_raw(&p.coords, &v.vec),
        })
    }

    /// Parallel transport of `v` (based at `p`) to `q`.
    pub fn partrans(
        &self,
        p: &ManifoldPoint,
        q: &ManifoldPoint,
        v: &TangentVector,
    ) -> Result<TangentVector, ManifoldError> {
        self.check_same(&p.tag)?;
        self.check_same(&q.tag)?;
        if !self.same_point(p, &v.base) {
            return Err(ManifoldError::BaseMismatch);
        }
        let vec = self.partrans_raw(&p.coords, &q.coords, &v.vec)?;
        Ok(TangentVector {
            base: q.clone(),
            vec,
        })
    }

    fn same_point(&self, a: &ManifoldPoint, b: &ManifoldPoint) -> bool {
        self.dist_raw(&a.coords, &b.coords) <= 1e-12
    }
}

impl ManifoldPoint {
    pub fn tag(&self) -> ManifoldTag {
        self.tag
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }
}

impl TangentVector {
    pub fn base(&self) -> &ManifoldPoint {
        &self.base
    }

    pub fn vec(&self) -> &[f64] {
        &self.vec
    }

    /// Riemannian length.
    pub fn norm(&self) -> f64 {
        self.base.tag.norm(&self.vec)
    }

    /// Scales the vector, keeping its base point.
    pub fn scaled(&self, t: f64) -> TangentVector {
        TangentVector {
            base: self.base.clone(),
            vec: self.vec.iter().map(|x| x * t).collect(),
        }
    }
}

/// Geodesic distance (free-function form).
pub fn dist(p: &ManifoldPoint, q: &ManifoldPoint) -> Result<f64, ManifoldError> {
    p.tag.dist(p, q)
}

/// Logarithm map (free-function form).
pub fn log(p: &ManifoldPoint, q: &ManifoldPoint) -> Result<TangentVector, ManifoldError> {
    p.tag.log(p, q)
}

/// Exponential map (free-function form).
pub fn exp(p: &ManifoldPoint, v: &TangentVector) -> Result<ManifoldPoint, ManifoldError> {
    p.tag.exp(p, v)
}

/// Parallel transport (free-function form).
pub fn partrans(
    p: &ManifoldPoint,
    q: &ManifoldPoint,
    v: &TangentVector,
) -> Result<TangentVector, ManifoldError> {
    p.tag.partrans(p, q, v)
}

/// Curvature constants (free-function form).
pub fn curvature_bounds(tag: ManifoldTag) -> CurvatureBounds {
    tag.curvature_bounds()
}
