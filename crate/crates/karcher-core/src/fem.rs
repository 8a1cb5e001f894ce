//! P1 Lagrange finite elements driven by a discrete metric.
//!
//! On an element with Gram matrix `G` of its edge vectors `pₐ − p₀`, the
//! barycentric gradients satisfy `⟨grad λᵃ, grad λᵇ⟩ = (G⁻¹)ₐᵦ` for
//! `a, b ≥ 1`, completed to index 0 by vanishing row sums.  The element
//! stiffness block is `|e|·Q` and the mass block `|e|(1+δᵢⱼ)/((n+1)(n+2))`.
//!
//! The same assembly accepts a varying Gram (the pullback metric `x*g` of a
//! Karcher simplex) sampled at quadrature nodes; the density `√det G` then
//! replaces the constant volume.
//!
//! Mean curvature follows the area-gradient picture: moving vertex `i`
//! changes `|s|` at the rate `|s|·grad λⁱ`, realized in the ambient space
//! through the edge vectors `log_{pᵢ} pⱼ`.

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::CsrMatrix;
use rayon::prelude::*;
use thiserror::Error;

use crate::complex::{Complex, ComplexError, DiscreteMetric};
use crate::dec::BoundaryCondition;
use crate::karcher::{BarycentricMap, KarcherError, SolverParams, FD_STEP};
use crate::linalg::{self, SolveError, SpdSolver};
use crate::manifold::{ManifoldError, ManifoldPoint, ManifoldTag};
use crate::quadrature::{self, Rule};
use crate::simplex;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FemError {
    #[error("element {element} is degenerate")]
    Degenerate { element: usize },
    #[error("expected {expected} values, got {got}")]
    Length { expected: usize, got: usize },
    #[error("data is incompatible with the closed-complex problem (⟨f,1⟩ = {0:e})")]
    Incompatible(f64),
    #[error("time step must be positive, got {0}")]
    TimeStep(f64),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Karcher(#[from] KarcherError),
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
    #[error(transparent)]
    Complex(#[from] ComplexError),
}

/// Which metric produced the element matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricSource {
    /// The constant edge-length metric `g^e`.
    EdgeLengths,
    /// The pullback `x*g` sampled at quadrature nodes.
    Pullback,
}

/// Assembled P1 stiffness and mass matrices.
#[derive(Debug, Clone)]
pub struct P1System {
    pub stiffness: CsrMatrix<f64>,
    pub mass: CsrMatrix<f64>,
    pub source: MetricSource,
    /// Element volumes under the assembling metric.
    pub volumes: Vec<f64>,
}

struct ElementBlocks {
    stiffness: DMatrix<f64>,
    mass: DMatrix<f64>,
    volume: f64,
}

/// `(n+1)×(n+1)` gradient inner products from the edge Gram matrix.
pub fn gradient_gram(g: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = g.nrows();
    let ginv = g.clone().cholesky()?.inverse();
    let mut q = DMatrix::zeros(n + 1, n + 1);
    q.view_mut((1, 1), (n, n)).copy_from(&ginv);
    for a in 1..=n {
        let s: f64 = (1..=n).map(|b| ginv[(a - 1, b - 1)]).sum();
        q[(a, 0)] = -s;
        q[(0, a)] = -s;
    }
    q[(0, 0)] = ginv.sum();
    Some(q)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn exact_mass(n: usize, volume: f64) -> DMatrix<f64> {
    let denom = ((n + 1) * (n + 2)) as f64;
    DMatrix::from_fn(n + 1, n + 1, |i, j| {
        volume * if i == j { 2.0 } else { 1.0 } / denom
    })
}

fn scatter(c: &Complex, blocks: Vec<ElementBlocks>, source: MetricSource) -> P1System {
    let nv = c.count(0);
    let mut ks = Vec::new();
    let mut ms = Vec::new();
    let mut volumes = Vec::with_capacity(blocks.len());
    for (e, b) in blocks.into_iter().enumerate() {
        let verts = &c.simplices(c.n())[e];
        for (a, &i) in verts.iter().enumerate() {
            for (bb, &j) in verts.iter().enumerate() {
                ks.push((i, j, b.stiffness[(a, bb)]));
                ms.push((i, j, b.mass[(a, bb)]));
            }
        }
        volumes.push(b.volume);
    }
    P1System {
        stiffness: linalg::csr_from_triplets(nv, nv, &ks),
        mass: linalg::csr_from_triplets(nv, nv, &ms),
        source,
        volumes,
    }
}

/// Assembles stiffness and mass from the edge-length metric.
pub fn assemble(c: &Complex, m: &DiscreteMetric) -> Result<P1System, FemError> {
    let n = c.n();
    let blocks = (0..c.count(n))
        .into_par_iter()
        .map(|e| {
            let l = m.element_lengths(c, e);
            let g = simplex::gram_from_lengths(&l).0;
            let det = g.determinant();
            let volume = if det > 0.0 {
                det.sqrt() / factorial(n)
            } else {
                0.0
            };
            if simplex::is_degenerate(&l) || volume <= 0.0 {
                return Err(FemError::Degenerate { element: e });
            }
            let q = gradient_gram(&g).ok_or(FemError::Degenerate { element: e })?;
            Ok(ElementBlocks {
                stiffness: q * volume,
                mass: exact_mass(n, volume),
                volume,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(scatter(c, blocks, MetricSource::EdgeLengths))
}

/// Assembles with a varying per-element Gram `gram(e, λ)` on the edge
/// directions `eₐ − e₀` (sorted-key vertex order), integrated with `rule`.
pub fn assemble_with_gram<G>(c: &Complex, rule: &Rule, gram: G) -> Result<P1System, FemError>
where
    G: Fn(usize, &[f64]) -> Result<DMatrix<f64>, FemError> + Sync,
{
    let n = c.n();
    let ref_volume = 1.0 / factorial(n);
    let blocks = (0..c.count(n))
        .into_par_iter()
        .map(|e| {
            let mut stiffness = DMatrix::zeros(n + 1, n + 1);
            let mut mass = DMatrix::zeros(n + 1, n + 1);
            let mut volume = 0.0;
            for (node, w) in rule.nodes.iter().zip(&rule.weights) {
                let g = gram(e, node)?;
                let det = g.determinant();
                if !(det > 0.0) {
                    return Err(FemError::Degenerate { element: e });
                }
                let density = w * ref_volume * det.sqrt();
                let q = gradient_gram(&g).ok_or(FemError::Degenerate { element: e })?;
                stiffness += q * density;
                for a in 0..=n {
                    for b in 0..=n {
                        mass[(a, b)] += density * node[a] * node[b];
                    }
                }
                volume += density;
            }
            Ok(ElementBlocks {
                stiffness,
                mass,
                volume,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(scatter(c, blocks, MetricSource::Pullback))
}

/// Assembles from the pullback metric of the Karcher simplices spanned by
/// `points`, sampled at the nodes of the symmetric degree-2 rule.
pub fn assemble_pullback(
    c: &Complex,
    points: &[ManifoldPoint],
    solver: SolverParams,
) -> Result<P1System, FemError> {
    let maps = karcher_maps(c, points, solver)?;
    let rule = quadrature::degree_two(c.n());
    assemble_with_gram(c, &rule, |e, lambda| {
        Ok(maps[e].pullback_gram(lambda, FD_STEP)?)
    })
}

/// One barycentric map per element, vertices in sorted-key order.
pub fn karcher_maps(
    c: &Complex,
    points: &[ManifoldPoint],
    solver: SolverParams,
) -> Result<Vec<BarycentricMap>, FemError> {
    c.simplices(c.n())
        .par_iter()
        .map(|el| {
            Ok(BarycentricMap::new(
                el.iter().map(|&v| points[v].clone()).collect(),
                solver,
            )?)
        })
        .collect()
}

/// `b_i = Σ_e |e| Σ_q w_q f(e, λ_q) λ_q^i` with `|e|` from `sys`; `λ` is
/// ordered like the element's sorted key.  The first error of `f` aborts.
pub fn load_vector<F, E>(c: &Complex, sys: &P1System, rule: &Rule, f: F) -> Result<DVector<f64>, E>
where
    F: Fn(usize, &[f64]) -> Result<f64, E> + Sync,
    E: Send,
{
    let local: Vec<Vec<f64>> = (0..c.count(c.n()))
        .into_par_iter()
        .map(|e| {
            let mut out = vec![0.0; c.n() + 1];
            for (node, w) in rule.nodes.iter().zip(&rule.weights) {
                let v = f(e, node)?;
                for (o, l) in out.iter_mut().zip(node) {
                    *o += sys.volumes[e] * w * v * l;
                }
            }
            Ok(out)
        })
        .collect::<Result<_, E>>()?;
    let mut b = DVector::zeros(c.count(0));
    for (e, vals) in local.iter().enumerate() {
        for (&v, x) in c.simplices(c.n())[e].iter().zip(vals) {
            b[v] += x;
        }
    }
    Ok(b)
}

/// Right-hand side of a scalar problem.
#[derive(Debug, Clone, PartialEq)]
pub enum Rhs {
    /// Vertex samples of `f`, integrated through the mass matrix.
    Samples(DVector<f64>),
    /// An assembled load vector `⟨f, λⁱ⟩`.
    Load(DVector<f64>),
}

impl Rhs {
    fn load(&self, sys: &P1System) -> Result<DVector<f64>, FemError> {
        let nv = sys.mass.nrows();
        let v = match self {
            Rhs::Samples(f) | Rhs::Load(f) => f,
        };
        if v.len() != nv {
            return Err(FemError::Length {
                expected: nv,
                got: v.len(),
            });
        }
        Ok(match self {
            Rhs::Samples(f) => linalg::spmv(&sys.mass, f),
            Rhs::Load(b) => b.clone(),
        })
    }
}

/// Solves `Lap(u_h, v) = ⟨f, v⟩` under the boundary condition.
pub fn poisson_p1(
    sys: &P1System,
    f: &Rhs,
    bc: &BoundaryCondition,
) -> Result<DVector<f64>, FemError> {
    let b = f.load(sys)?;
    match bc {
        BoundaryCondition::ZeroMean => {
            let total = b.sum();
            if total.abs() > 1e-10 * (b.abs().sum() + f64::MIN_POSITIVE) {
                return Err(FemError::Incompatible(total));
            }
            let weights = linalg::row_sums(&sys.mass);
            Ok(linalg::solve_zero_mean(&sys.stiffness, &b, &weights)?)
        }
        BoundaryCondition::Dirichlet(fixed) => {
            Ok(linalg::solve_dirichlet(&sys.stiffness, &b, fixed)?)
        }
    }
}

/// `√(vᵀ A v)`.
pub fn quadratic_norm(a: &CsrMatrix<f64>, v: &DVector<f64>) -> f64 {
    v.dot(&linalg::spmv(a, v)).max(0.0).sqrt()
}

/// Solutions under two assemblies and the norms of their difference.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricComparison {
    pub u1: DVector<f64>,
    pub u2: DVector<f64>,
    /// `‖u₁ − u₂‖` in the mass norm of the second system.
    pub l2: f64,
    /// `‖u₁ − u₂‖` in the stiffness seminorm of the second system.
    pub energy: f64,
}

/// Solves the same problem with two assemblies, e.g. pullback versus
/// edge-length metric.
pub fn compare_metrics(
    s1: &P1System,
    s2: &P1System,
    f1: &Rhs,
    f2: &Rhs,
    bc: &BoundaryCondition,
) -> Result<MetricComparison, FemError> {
    let u1 = poisson_p1(s1, f1, bc)?;
    let u2 = poisson_p1(s2, f2, bc)?;
    let d = &u1 - &u2;
    Ok(MetricComparison {
        l2: quadratic_norm(&s2.mass, &d),
        energy: quadratic_norm(&s2.stiffness, &d),
        u1,
        u2,
    })
}

/// States of an implicit Euler heat flow and their energies.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatTrajectory {
    pub states: Vec<DVector<f64>>,
    /// `½⟨du,du⟩ − ⟨f,u⟩` per state.
    pub energies: Vec<f64>,
}

/// `(M + τK)uⁿ = M uⁿ⁻¹ + τ M f` for `steps` steps.
pub fn heat_flow(
    sys: &P1System,
    u0: &DVector<f64>,
    f: &DVector<f64>,
    tau: f64,
    steps: usize,
) -> Result<HeatTrajectory, FemError> {
    if !(tau > 0.0) {
        return Err(FemError::TimeStep(tau));
    }
    let nv = sys.mass.nrows();
    for v in [u0, f] {
        if v.len() != nv {
            return Err(FemError::Length {
                expected: nv,
                got: v.len(),
            });
        }
    }
    let system = &sys.mass + &(&sys.stiffness * tau);
    let solver = SpdSolver::new(&system)?;
    let mf = linalg::spmv(&sys.mass, f);
    let energy = |u: &DVector<f64>| 0.5 * quadratic_norm(&sys.stiffness, u).powi(2) - mf.dot(u);
    let mut states = vec![u0.clone()];
    let mut energies = vec![energy(u0)];
    for _ in 0..steps {
        let prev = states.last().expect("nonempty");
        let rhs = linalg::spmv(&sys.mass, prev) + &mf * tau;
        let next = solver.solve(&rhs)?;
        energies.push(energy(&next));
        states.push(next);
    }
    Ok(HeatTrajectory { states, energies })
}

/// `−|s|·grad λⁱ` in the ambient space for vertex `local` of an element:
/// `|s|·F·G⁻¹·1` with `F` the log edge vectors at `pᵢ` and `G` the
/// edge-length Gram matrix in that vertex order.
fn vertex_area_gradient(
    c: &Complex,
    m: &DiscreteMetric,
    tag: &ManifoldTag,
    points: &[ManifoldPoint],
    e: usize,
    local: usize,
) -> Result<(Vec<f64>, f64), FemError> {
    let el = &c.elements()[e];
    let mut order = vec![el[local]];
    order.extend(
        el.iter()
            .enumerate()
            .filter(|(a, _)| *a != local)
            .map(|(_, v)| *v),
    );
    let lengths = m.simplex_lengths(c, &order);
    let g = simplex::gram_from_lengths(&lengths).0;
    let n = g.nrows();
    let volume = g.determinant().max(0.0).sqrt() / factorial(n);
    let y = g
        .cholesky()
        .ok_or(FemError::Degenerate { element: e })?
        .solve(&DVector::from_element(n, 1.0));
    let base = points[order[0]].coords();
    let mut out = vec![0.0; base.len()];
    for (a, &v) in order[1..].iter().enumerate() {
        let f = tag.log_raw(base, points[v].coords())?;
        for (o, x) in out.iter_mut().zip(&f) {
            *o += volume * y[a] * x;
        }
    }
    Ok((out, volume))
}

/// The ℓ² mean curvature vectors `H_i = −Σ_{s∋i} |s|·grad_s λⁱ`, the
/// negative area gradient (pointing inward on a convex surface).
pub fn mean_curvature_vertex(
    c: &Complex,
    m: &DiscreteMetric,
    tag: &ManifoldTag,
    points: &[ManifoldPoint],
) -> Result<Vec<Vec<f64>>, FemError> {
    let nv = c.count(0);
    if points.len() != nv {
        return Err(FemError::Length {
            expected: nv,
            got: points.len(),
        });
    }
    let dim = tag.ambient_dim();
    let local: Vec<Vec<Vec<f64>>> = (0..c.count(c.n()))
        .into_par_iter()
        .map(|e| {
            (0..=c.n())
                .map(|a| vertex_area_gradient(c, m, tag, points, e, a).map(|r| r.0))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut h = vec![vec![0.0; dim]; nv];
    for (e, vecs) in local.iter().enumerate() {
        for (&v, x) in c.elements()[e].iter().zip(vecs) {
            h[v].iter_mut().zip(x).for_each(|(a, b)| *a += b);
        }
    }
    Ok(h)
}

/// Solves `M·H = H_{ℓ²}` componentwise.  Boundary vertices of a complex
/// with boundary are held at zero (the area functional is taken with fixed
/// boundary), so the interior block `M_II` is solved.
pub fn mean_curvature_l2(
    c: &Complex,
    sys: &P1System,
    hl2: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>, FemError> {
    let nv = c.count(0);
    if hl2.len() != nv {
        return Err(FemError::Length {
            expected: nv,
            got: hl2.len(),
        });
    }
    let dim = hl2.first().map_or(0, Vec::len);
    let boundary = c.boundary_vertices();
    let free: Vec<usize> = (0..nv).filter(|&v| !boundary[v]).collect();
    let mut out = vec![vec![0.0; dim]; nv];
    if free.is_empty() {
        return Ok(out);
    }
    let solver = SpdSolver::new(&linalg::submatrix(&sys.mass, &free))?;
    for d in 0..dim {
        let rhs = DVector::from_iterator(free.len(), free.iter().map(|&v| hl2[v][d]));
        let x = solver.solve(&rhs)?;
        for (k, &v) in free.iter().enumerate() {
            out[v][d] = x[k];
        }
    }
    Ok(out)
}

/// Volume of a Karcher simplex, `∫_Δ √det(x*g)` by quadrature.
pub fn karcher_volume(map: &BarycentricMap, rule: &Rule) -> Result<f64, FemError> {
    let mut v = 0.0;
    for (node, w) in rule.nodes.iter().zip(&rule.weights) {
        let g = map.pullback_gram(node, FD_STEP)?;
        v += w * g.determinant().max(0.0).sqrt();
    }
    Ok(v / factorial(map.n()))
}

/// Finite-difference and edge-length-metric area differentials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreaDifferential {
    /// Central difference of the Karcher area along `exp(pᵢ, ±εw)`.
    pub fd: f64,
    /// `|s|·⟨grad λⁱ, w⟩` from `g^e`, realized through log edge vectors.
    pub formula: f64,
    pub gap: f64,
    /// `|s|` under `g^e`.
    pub volume: f64,
}

/// Compares the differential of the Karcher simplex volume under moving
/// vertex `i` along `w` with the edge-length formula.
pub fn area_differential_check(
    points: &[ManifoldPoint],
    i: usize,
    w: &[f64],
    eps: f64,
    solver: SolverParams,
    quad_degree: usize,
) -> Result<AreaDifferential, FemError> {
    let tag = points
        .first()
        .ok_or(FemError::Length {
            expected: 1,
            got: 0,
        })?
        .tag();
    let rule = quadrature::grundmann_moller(points.len() - 1, quad_degree);
    let moved = |t: f64| -> Result<f64, FemError> {
        let mut pts = points.to_vec();
        let v: Vec<f64> = w.iter().map(|x| t * x).collect();
        pts[i] = tag.project(tag.exp_raw(points[i].coords(), &v))?;
        karcher_volume(&BarycentricMap::new(pts, solver)?, &rule)
    };
    let fd = (moved(eps)? - moved(-eps)?) / (2.0 * eps);

    let c = Complex::new(vec![(0..points.len()).collect()])?;
    let m = DiscreteMetric::from_points(&c, &tag, points)?;
    let (grad, volume) = vertex_area_gradient(&c, &m, &tag, points, 0, i)?;
    // grad holds −|s|·grad λⁱ
    let formula = -tag.inner(&grad, w);
    Ok(AreaDifferential {
        fd,
        formula,
        gap: (fd - formula).abs(),
        volume,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equilateral_triangle_matrices() {
        let c = Complex::new(vec![vec![0, 1, 2]]).unwrap();
        let m = DiscreteMetric::new(&c, vec![1.0; 3]).unwrap();
        let sys = assemble(&c, &m).unwrap();
        let k = linalg::to_dense(&sys.stiffness);
        let mm = linalg::to_dense(&sys.mass);
        let area = 3f64.sqrt() / 4.0;
        for i in 0..3 {
            for j in 0..3 {
                if i == j {
                    assert!((k[(i, j)] - 1.0 / 3f64.sqrt()).abs() < 1e-14);
                    assert!((mm[(i, j)] - area / 6.0).abs() < 1e-15);
                } else {
                    assert!((k[(i, j)] + 1.0 / (2.0 * 3f64.sqrt())).abs() < 1e-14);
                    assert!((mm[(i, j)] - area / 12.0).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn zero_dirichlet_data_gives_zero() {
        let mesh = crate::meshes::square_grid(3);
        let c = mesh.complex().unwrap();
        let m = DiscreteMetric::from_coordinates(&c, &mesh.coords);
        let sys = assemble(&c, &m).unwrap();
        let bd = c.boundary_vertices();
        let fixed: Vec<(usize, f64)> = (0..c.count(0))
            .filter(|&v| bd[v])
            .map(|v| (v, 0.0))
            .collect();
        let u = poisson_p1(
            &sys,
            &Rhs::Samples(DVector::zeros(c.count(0))),
            &BoundaryCondition::Dirichlet(fixed),
        )
        .unwrap();
        assert_eq!(u.amax(), 0.0);
    }

    #[test]
    fn load_of_a_p1_function_is_its_mass_product() {
        let mesh = crate::meshes::square_grid(3);
        let c = mesh.complex().unwrap();
        let m = DiscreteMetric::from_coordinates(&c, &mesh.coords);
        let sys = assemble(&c, &m).unwrap();
        let u = DVector::from_fn(c.count(0), |i, _| (i as f64 * 0.37).sin());
        let rule = quadrature::degree_two(2);
        let b = load_vector(&c, &sys, &rule, |e, lambda| {
            Ok::<_, FemError>(
                c.simplices(2)[e]
                    .iter()
                    .zip(lambda)
                    .map(|(&v, l)| l * u[v])
                    .sum(),
            )
        })
        .unwrap();
        assert!((b - linalg::spmv(&sys.mass, &u)).amax() < 1e-15);
        let failing = load_vector(&c, &sys, &rule, |_, _| Err(FemError::TimeStep(0.0)));
        assert!(failing.is_err());
    }

    #[test]
    fn constant_state_is_stationary() {
        let mesh = crate::meshes::icosahedron();
        let c = mesh.complex().unwrap();
        let m = DiscreteMetric::from_coordinates(&c, &mesh.coords);
        let sys = assemble(&c, &m).unwrap();
        let u0 = DVector::from_element(12, 0.7);
        let t = heat_flow(&sys, &u0, &DVector::zeros(12), 0.1, 5).unwrap();
        for s in &t.states {
            assert!((s - &u0).amax() < 1e-14);
        }
    }
}
