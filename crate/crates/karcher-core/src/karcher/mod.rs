//! Karcher means and the barycentric mapping `x: Δ → M`.
//!
//! `x(λ)` is the minimiser of the energy `Σ λⁱ d²(a, pᵢ)`, found as the zero of
//! `F(a, λ) = Σ λⁱ log_a pᵢ` by the classical fixed-point iteration
//! `a ← exp_a(Σ λⁱ log_a pᵢ)`.  Derivatives of `x` are measured by finite
//! differences in barycentric coordinates, which is all the distortion
//! experiments need:
//!
//! - `dx v ≈ (log_{x(λ)} x(λ+εv) − log_{x(λ)} x(λ−εv)) / 2ε`,
//! - `∇dx(v,v) ≈ (log_{x(λ)} x(λ+εv) + log_{x(λ)} x(λ−εv)) / ε²`.
//!
//! Directions `v` are mean-zero vectors in `ℝⁿ⁺¹`; the flat metric induced by
//! the geodesic edge lengths is `g^e(v,w) = vᵀ E w` with `E = −½ ℓ²`.

pub mod delaunay;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::complex::ComplexError;
use crate::manifold::{ManifoldError, ManifoldPoint, ManifoldTag};
use crate::simplex::EdgeLengths;

pub use delaunay::{delaunay, DelaunayOptions};

/// Step for central first differences, in barycentric units.
pub const FD_STEP: f64 = 1e-3;
/// Step for symmetric second differences, in barycentric units.
pub const FD_STEP_SECOND: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KarcherError {
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error("Karcher iteration did not converge in {iterations} steps (residual {residual:e})")]
    MaxIter { iterations: usize, residual: f64 },
    #[error("points do not fit in a ball of radius {bound} (need radius {radius})")]
    Convexity { radius: f64, bound: f64 },
    #[error("barycentric weights must be nonnegative and sum to one, got {0:?}")]
    BadWeights(Vec<f64>),
    #[error("probe λ ± εv leaves the simplex")]
    ProbeOutside,
    #[error("need at least one point")]
    Empty,
    #[error("point lies outside the domain simplex")]
    OutsideDomain,
    #[error("Delaunay construction needs a 2-manifold, got dimension {0}")]
    NotSurface(usize),
    #[error("non-generic vertex configuration: {0}")]
    NonGeneric(String),
    #[error("vertex set {0:?} is spanned twice (duplicated Delaunay triangle)")]
    DuplicateSimplex(Vec<usize>),
}

/// Stopping rule of the mean iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 200,
        }
    }
}

/// Result of a mean solve.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanSolveReport {
    pub result: ManifoldPoint,
    pub iterations: usize,
    /// `|Σ λⁱ log_a pᵢ|` at the returned point.
    pub residual: f64,
}

/// Metric and connection distortion of `x` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionSample {
    pub lambda: Vec<f64>,
    /// `sup_v |(x*g − g^e)(v,v)| / g^e(v,v)`.
    pub metric_defect: f64,
    /// `max_v |∇dx(v,v)| / g^e(v,v)` over the edge directions.
    pub connection_defect: f64,
}

fn check_weights(lambda: &[f64], n: usize) -> Result<(), KarcherError> {
    let ok = lambda.len() == n
        && lambda.iter().all(|l| l.is_finite() && *l >= -1e-12)
        && (lambda.iter().sum::<f64>() - 1.0).abs() <= 1e-12 * n as f64;
    if ok {
        Ok(())
    } else {
        Err(KarcherError::BadWeights(lambda.to_vec()))
    }
}

/// `E(a, λ) = Σ λⁱ d²(a, pᵢ)`.
pub fn energy(
    a: &ManifoldPoint,
    lambda: &[f64],
    pts: &[ManifoldPoint],
) -> Result<f64, KarcherError> {
    let tag = a.tag();
    let mut e = 0.0;
    for (l, p) in lambda.iter().zip(pts) {
        e += l * tag.dist(a, p)?.powi(2);
    }
    Ok(e)
}

fn coordinate_scale(pts: &[ManifoldPoint]) -> f64 {
    pts.iter()
        .flat_map(|p| p.coords().iter())
        .fold(1.0f64, |m, c| m.max(c.abs()))
}

/// Radius of the smallest ball centred at one of `centres` containing `pts`.
fn enclosing_radius(tag: &ManifoldTag, centres: &[&[f64]], pts: &[ManifoldPoint]) -> f64 {
    centres
        .iter()
        .map(|c| {
            pts.iter()
                .map(|p| tag.dist_raw(c, p.coords()))
                .fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Radius of a ball containing `pts`, centred at the best of the vertices and
/// an approximate uniform centre (three uniform Karcher steps from `p₀`).
fn enclosing_ball_radius(tag: &ManifoldTag, pts: &[ManifoldPoint]) -> Result<f64, KarcherError> {
    let mut centres: Vec<&[f64]> = pts.iter().map(|p| p.coords()).collect();
    let w = 1.0 / pts.len() as f64;
    let mut c = pts[0].coords().to_vec();
    for _ in 0..3 {
        let mut g = vec![0.0; c.len()];
        for p in pts {
            match tag.log_raw(&c, p.coords()) {
                Ok(v) => g.iter_mut().zip(&v).for_each(|(x, y)| *x += w * y),
                // a cut-locus pair cannot lie in any admissible ball
                Err(_) => return Ok(f64::INFINITY),
            }
        }
        c = tag.exp_raw(&c, &g);
    }
    centres.push(&c);
    Ok(enclosing_radius(tag, &centres, pts))
}

/// The weighted Karcher mean of `pts`.
///
/// The iteration starts at `p_{argmax λ}` and stops once the step
/// `|Σ λⁱ log_a pᵢ|` is at most `tol`.  Requested tolerances below the
/// attainable floating-point resolution (`64·ε_mach` times the coordinate
/// scale) are raised to that floor.
pub fn karcher_mean(
    pts: &[ManifoldPoint],
    lambda: &[f64],
    solver: SolverParams,
) -> Result<MeanSolveReport, KarcherError> {
    let first = pts.first().ok_or(KarcherError::Empty)?;
    let tag = first.tag();
    check_weights(lambda, pts.len())?;
    let cvr = tag.curvature_bounds().cvr;
    if cvr.is_finite() {
        let bound = cvr / 2.0 * (1.0 + 1e-12);
        let radius = enclosing_ball_radius(&tag, pts)?;
        if radius > bound {
            return Err(KarcherError::Convexity { radius, bound });
        }
    }

    let floor = 64.0 * f64::EPSILON * coordinate_scale(pts);
    let tol = solver.tol.max(floor);
    let seed = lambda
        .iter()
        .enumerate()
        .fold(0, |best, (i, l)| if *l > lambda[best] { i } else { best });
    let mut a = pts[seed].coords().to_vec();
    let amb = tag.ambient_dim();
    for it in 0..=solver.max_iter {
        let mut g = vec![0.0; amb];
        for (l, p) in lambda.iter().zip(pts) {
            if *l == 0.0 {
                continue;
            }
            let v = tag.log_raw(&a, p.coords())?;
            g.iter_mut().zip(&v).for_each(|(x, y)| *x += l * y);
        }
        let step = tag.norm(&g);
        if step <= tol {
            let result = tag.project(a)?;
            return Ok(MeanSolveReport {
                result,
                iterations: it,
                residual: step,
            });
        }
        if it == solver.max_iter {
            return Err(KarcherError::MaxIter {
                iterations: it,
                residual: step,
            });
        }
        a = tag.exp_raw(&a, &g);
    }
    unreachable!("loop returns on its last iteration")
}

/// Vertex points plus solver settings defining `x: Δ → M`.
#[derive(Debug, Clone)]
pub struct BarycentricMap {
    tag: ManifoldTag,
    points: Vec<ManifoldPoint>,
    solver: SolverParams,
    lengths: EdgeLengths,
}

impl BarycentricMap {
    /// Checks that the points share a tag and fit in a ball of radius
    /// `cvr/2` centred at a vertex or at their uniform mean.
    pub fn new(points: Vec<ManifoldPoint>, solver: SolverParams) -> Result<Self, KarcherError> {
        let tag = points.first().ok_or(KarcherError::Empty)?.tag();
        for p in &points {
            if p.tag() != tag {
                return Err(ManifoldError::TagMismatch(tag, p.tag()).into());
            }
        }
        let k = points.len();
        let uniform = vec![1.0 / k as f64; k];
        // the mean solve performs the convexity checks
        karcher_mean(&points, &uniform, solver)?;
        let len = DMatrix::from_fn(k, k, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Less => tag.dist_raw(points[i].coords(), points[j].coords()),
            std::cmp::Ordering::Equal => 0.0,
            std::cmp::Ordering::Greater => tag.dist_raw(points[j].coords(), points[i].coords()),
        });
        let lengths = EdgeLengths::from_matrix(len).map_err(|_| KarcherError::Empty)?;
        Ok(Self {
            tag,
            points,
            solver,
            lengths,
        })
    }

    pub fn tag(&self) -> ManifoldTag {
        self.tag
    }

    pub fn points(&self) -> &[ManifoldPoint] {
        &self.points
    }

    pub fn solver(&self) -> SolverParams {
        self.solver
    }

    /// Simplex dimension `n`.
    pub fn n(&self) -> usize {
        self.points.len() - 1
    }

    /// Geodesic edge lengths, the data of the flat metric `g^e`.
    pub fn edge_lengths(&self) -> &EdgeLengths {
        &self.lengths
    }

    /// Largest edge length.
    pub fn h(&self) -> f64 {
        self.lengths.diameter()
    }

    /// Full solve report for `x(λ)`.
    pub fn solve(&self, lambda: &[f64]) -> Result<MeanSolveReport, KarcherError> {
        karcher_mean(&self.points, lambda, self.solver)
    }

    /// `x(λ)`.
    pub fn bary_map(&self, lambda: &[f64]) -> Result<ManifoldPoint, KarcherError> {
        Ok(self.solve(lambda)?.result)
    }

    /// `g^e(v, w) = vᵀ E w` for mean-zero barycentric directions.
    pub fn flat_metric(&self, v: &[f64], w: &[f64]) -> f64 {
        let k = self.points.len();
        let mut s = 0.0;
        for i in 0..k {
            for j in 0..k {
                s -= 0.5 * self.lengths.get(i, j).powi(2) * v[i] * w[j];
            }
        }
        s
    }

    /// Gram matrix of `g^e` on the edge directions `eₐ − e₀`.
    pub fn flat_gram(&self) -> DMatrix<f64> {
        crate::simplex::gram_from_lengths(&self.lengths).0
    }

    fn shifted(&self, lambda: &[f64], v: &[f64], t: f64) -> Result<Vec<f64>, KarcherError> {
        let out: Vec<f64> = lambda.iter().zip(v).map(|(l, d)| l + t * d).collect();
        if out.iter().any(|x| *x < -1e-14) {
            return Err(KarcherError::ProbeOutside);
        }
        Ok(out.into_iter().map(|x| x.max(0.0)).collect())
    }

    /// `log_{x(λ)} x(λ ± εv)`, both signs.
    fn probe(
        &self,
        lambda: &[f64],
        v: &[f64],
        eps: f64,
    ) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>), KarcherError> {
        let plus = self.shifted(lambda, v, eps)?;
        let minus = self.shifted(lambda, v, -eps)?;
        let x = self.bary_map(lambda)?;
        let xp = self.bary_map(&plus)?;
        let xm = self.bary_map(&minus)?;
        let lp = self.tag.log_raw(x.coords(), xp.coords())?;
        let lm = self.tag.log_raw(x.coords(), xm.coords())?;
        Ok((x.into_coords(), lp, lm))
    }

    /// Ambient realization of `dx v` at `x(λ)` by central differences.
    pub fn differential(
        &self,
        lambda: &[f64],
        v: &[f64],
        eps: f64,
    ) -> Result<Vec<f64>, KarcherError> {
        let (_, lp, lm) = self.probe(lambda, v, eps)?;
        Ok(lp
            .iter()
            .zip(&lm)
            .map(|(a, b)| (a - b) / (2.0 * eps))
            .collect())
    }

    /// `(x*g)(v, w)` at `λ`.
    pub fn pullback_metric(
        &self,
        lambda: &[f64],
        v: &[f64],
        w: &[f64],
        eps: f64,
    ) -> Result<f64, KarcherError> {
        let dv = self.differential(lambda, v, eps)?;
        let dw = self.differential(lambda, w, eps)?;
        Ok(self.tag.inner(&dv, &dw))
    }

    /// Differentials along the edge directions `eₐ − e₀`, `a = 1..n`.
    pub fn edge_differentials(
        &self,
        lambda: &[f64],
        eps: f64,
    ) -> Result<Vec<Vec<f64>>, KarcherError> {
        let k = self.points.len();
        (1..k)
            .map(|a| {
                let mut v = vec![0.0; k];
                v[a] = 1.0;
                v[0] = -1.0;
                self.differential(lambda, &v, eps)
            })
            .collect()
    }

    /// Gram matrix of `x*g` on the edge directions `eₐ − e₀`.
    pub fn pullback_gram(&self, lambda: &[f64], eps: f64) -> Result<DMatrix<f64>, KarcherError> {
        let d = self.edge_differentials(lambda, eps)?;
        let n = d.len();
        Ok(DMatrix::from_fn(n, n, |a, b| self.tag.inner(&d[a], &d[b])))
    }

    /// Raw `|∇dx(v,v)|` by the symmetric second difference.
    pub fn connection_defect(
        &self,
        lambda: &[f64],
        v: &[f64],
        eps: f64,
    ) -> Result<f64, KarcherError> {
        let (_, lp, lm) = self.probe(lambda, v, eps)?;
        let acc: Vec<f64> = lp
            .iter()
            .zip(&lm)
            .map(|(a, b)| (a + b) / (eps * eps))
            .collect();
        Ok(self.tag.norm(&acc))
    }

    /// Both distortion measures at `λ`: the metric defect is the exact
    /// supremum over all directions, the connection defect the maximum over
    /// the edge directions `eⱼ − eᵢ`.
    pub fn distortion_sample(
        &self,
        lambda: &[f64],
        eps: f64,
        eps_second: f64,
    ) -> Result<DistortionSample, KarcherError> {
        let g = self.pullback_gram(lambda, eps)?;
        let ge = self.flat_gram();
        let chol = ge.clone().cholesky().ok_or(KarcherError::Empty)?;
        let linv = chol.l().try_inverse().ok_or(KarcherError::Empty)?;
        let sym = &linv * (&g - &ge) * linv.transpose();
        let sym = (&sym + sym.transpose()) * 0.5;
        let metric_defect = sym
            .symmetric_eigenvalues()
            .iter()
            .fold(0.0f64, |m, e| m.max(e.abs()));
        let k = self.points.len();
        let mut connection = 0.0f64;
        for i in 0..k {
            for j in (i + 1)..k {
                let mut v = vec![0.0; k];
                v[j] = 1.0;
                v[i] = -1.0;
                let norm2 = self.flat_metric(&v, &v);
                connection =
                    connection.max(self.connection_defect(lambda, &v, eps_second)? / norm2);
            }
        }
        Ok(DistortionSample {
            lambda: lambda.to_vec(),
            metric_defect,
            connection_defect: connection,
        })
    }
}

/// The Lagrange interpolant `u_h(λ) = Σ λⁱ u(pᵢ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct P1Function {
    pub values: Vec<f64>,
}

impl P1Function {
    pub fn eval(&self, lambda: &[f64]) -> f64 {
        lambda.iter().zip(&self.values).map(|(l, u)| l * u).sum()
    }

    /// `du_h(v) = Σ vⁱ u(pᵢ)`.
    pub fn differential(&self, v: &[f64]) -> f64 {
        self.eval(v)
    }
}

/// Interpolates vertex samples of a scalar function.
pub fn interpolate_scalar(m: &BarycentricMap, samples: &[f64]) -> P1Function {
    assert_eq!(samples.len(), m.points().len(), "one sample per vertex");
    P1Function {
        values: samples.to_vec(),
    }
}

/// `y_h = x_M ∘ x_N⁻¹` for a flat domain simplex.
#[derive(Debug, Clone)]
pub struct MapInterpolant {
    domain: Vec<DVector<f64>>,
    inverse: DMatrix<f64>,
    image: BarycentricMap,
}

impl MapInterpolant {
    /// Barycentric coordinates of a domain point.
    pub fn barycentric(&self, point: &[f64]) -> Vec<f64> {
        let rel = DVector::from_iterator(
            point.len(),
            point.iter().zip(self.domain[0].iter()).map(|(p, o)| p - o),
        );
        let mu = &self.inverse * rel;
        let mut lambda = vec![1.0 - mu.sum()];
        lambda.extend(mu.iter());
        lambda
    }

    /// `y_h(point)`.
    pub fn eval(&self, point: &[f64]) -> Result<ManifoldPoint, KarcherError> {
        let lambda = self.barycentric(point);
        if lambda.iter().any(|l| *l < -1e-12) {
            return Err(KarcherError::OutsideDomain);
        }
        let lambda: Vec<f64> = lambda.iter().map(|l| l.max(0.0)).collect();
        let s: f64 = lambda.iter().sum();
        let lambda: Vec<f64> = lambda.iter().map(|l| l / s).collect();
        self.image.bary_map(&lambda)
    }

    pub fn image(&self) -> &BarycentricMap {
        &self.image
    }
}

/// Interpolates `y` on the flat simplex spanned by `domain` from the image
/// points `y(pᵢ)`.
pub fn interpolate_map(
    domain: Vec<DVector<f64>>,
    image_points: Vec<ManifoldPoint>,
    solver: SolverParams,
) -> Result<MapInterpolant, KarcherError> {
    let n = domain.len().checked_sub(1).ok_or(KarcherError::Empty)?;
    let frame = DMatrix::from_fn(domain[0].len(), n, |r, c| domain[c + 1][r] - domain[0][r]);
    if frame.nrows() != n {
        return Err(KarcherError::OutsideDomain);
    }
    let inverse = frame.try_inverse().ok_or(KarcherError::OutsideDomain)?;
    let image = BarycentricMap::new(image_points, solver)?;
    Ok(MapInterpolant {
        domain,
        inverse,
        image,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn s2(c: [f64; 3]) -> ManifoldPoint {
        ManifoldTag::sphere(2).point(c.to_vec()).unwrap()
    }

    #[test]
    fn energy_examples() {
        let a = s2([1., 0., 0.]);
        assert_eq!(
            energy(&a, &[1.0, 0.0], &[a.clone(), s2([0., 1., 0.])]).unwrap(),
            0.0
        );
        let r = ManifoldTag::euclidean(1);
        let pts = vec![r.point(vec![0.0]).unwrap(), r.point(vec![2.0]).unwrap()];
        assert!(
            (energy(&r.point(vec![1.0]).unwrap(), &[0.5, 0.5], &pts).unwrap() - 1.0).abs() < 1e-15
        );
        let h = 0.5f64.sqrt();
        let mid = s2([h, h, 0.]);
        let e = energy(&mid, &[0.5, 0.5], &[s2([1., 0., 0.]), s2([0., 1., 0.])]).unwrap();
        assert!((e - PI * PI / 16.0).abs() < 1e-14);
    }

    #[test]
    fn sphere_midpoint() {
        let r = karcher_mean(
            &[s2([1., 0., 0.]), s2([0., 1., 0.])],
            &[0.5, 0.5],
            SolverParams::default(),
        )
        .unwrap();
        let h = 0.5f64.sqrt();
        assert!(r
            .result
            .coords()
            .iter()
            .zip([h, h, 0.0])
            .all(|(a, b)| (a - b).abs() < 1e-10));
        assert!(r.residual <= 1e-10);
    }

    #[test]
    fn vertex_weights_give_vertices() {
        let pts = vec![s2([1., 0., 0.]), s2([0.8, 0.6, 0.]), s2([0.8, 0., 0.6])];
        for i in 0..3 {
            let mut l = vec![0.0; 3];
            l[i] = 1.0;
            let r = karcher_mean(&pts, &l, SolverParams::default()).unwrap();
            assert_eq!(r.iterations, 0);
            assert!(ManifoldTag::sphere(2).dist(&r.result, &pts[i]).unwrap() < 1e-15);
        }
    }

    #[test]
    fn antipodal_points_violate_convexity() {
        let r = karcher_mean(
            &[s2([1., 0., 0.]), s2([-1., 0., 0.])],
            &[0.5, 0.5],
            SolverParams::default(),
        );
        assert!(matches!(r, Err(KarcherError::Convexity { .. })));
    }

    #[test]
    fn bad_weights_are_rejected() {
        let pts = vec![s2([1., 0., 0.]), s2([0., 1., 0.])];
        assert!(matches!(
            karcher_mean(&pts, &[0.7, 0.7], SolverParams::default()),
            Err(KarcherError::BadWeights(_))
        ));
    }

    #[test]
    fn euclidean_pullback_is_flat() {
        let t = ManifoldTag::euclidean(2);
        let pts = vec![
            t.point(vec![0.0, 0.0]).unwrap(),
            t.point(vec![1.0, 0.2]).unwrap(),
            t.point(vec![0.3, 0.9]).unwrap(),
        ];
        let m = BarycentricMap::new(pts, SolverParams::default()).unwrap();
        let lam = [0.2, 0.3, 0.5];
        let g = m.pullback_gram(&lam, FD_STEP).unwrap();
        assert!((g - m.flat_gram()).amax() < 1e-8);
        let v = [1.0, -0.5, -0.5];
        assert!(m.connection_defect(&lam, &v, FD_STEP_SECOND).unwrap() < 1e-6);
    }

    #[test]
    fn probes_must_stay_inside() {
        let t = ManifoldTag::euclidean(1);
        let m = BarycentricMap::new(
            vec![t.point(vec![0.0]).unwrap(), t.point(vec![1.0]).unwrap()],
            SolverParams::default(),
        )
        .unwrap();
        assert!(matches!(
            m.differential(&[1.0, 0.0], &[-1.0, 1.0], 1e-3),
            Err(KarcherError::ProbeOutside)
        ));
    }
}
