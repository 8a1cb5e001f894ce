//! Discrete exterior calculus on cochains and on piecewise-constant forms.
//!
//! Cochains `Cᵏ` carry the DEC inner product `⟨f^s, f^s⟩ = a_k |*s|/|s|`; the
//! space `P⁻¹Ωᵏ` of forms constant on each neighbourhood `U(s)` has the basis
//! `ω^s` (the unit volume form of `s`, extended constantly over `U(s)`) and
//! the diagonal `L²` inner product `⟨ω^s, ω^s⟩ = |U(s)|`.  On it
//!
//! - `d̲_s^t = (|t|/|s|)·∂_s^t` (exterior derivative),
//! - `δ̲_t^s = (|U(s)|/|U(t)|)·d̲_s^t` (its adjoint),
//!
//! and `i_k: f^s ↦ ω^s/|s|` intertwines `d` with `d̲`.  With the volume
//! identity `|s||*s| = binom(n,k)|U(s)|` of well-centred complexes, `i_k` is
//! an isometry exactly when `a_k = 1/binom(n,k)`, which is the weight used
//! here.
//!
//! All matrices are stored sparse in canonical (sorted-key) orientation.

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::CsrMatrix;
use thiserror::Error;

use crate::complex::{binom, Complex, DiscreteMetric, DualVolumes};
use crate::linalg::{self, SolveError};
use crate::quadrature;

/// Ranks and least-squares problems up to this size use dense SVD.
pub const DENSE_LS_LIMIT: usize = 5000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecError {
    #[error("simplex {index} of degree {degree} has zero dual volume")]
    ZeroDualVolume { degree: usize, index: usize },
    #[error("degree {0} out of range")]
    Degree(usize),
    #[error("expected {expected} coefficients, got {got}")]
    Length { expected: usize, got: usize },
    #[error("data is incompatible with the closed-complex problem (⟨f,1⟩ = {0:e})")]
    Incompatible(f64),
    #[error("moment system of element {element} is rank deficient (condition {condition:e})")]
    RankDeficient { element: usize, condition: f64 },
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// Coefficients per oriented `k`-simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct Cochain {
    pub degree: usize,
    pub coeffs: DVector<f64>,
}

/// Coefficients in the basis `ω^s` of `P⁻¹Ωᵏ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pm1Form {
    pub degree: usize,
    pub coeffs: DVector<f64>,
}

/// Boundary treatment for scalar problems.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryCondition {
    /// Closed (or pure Neumann) problem solved in the mean-zero complement.
    ZeroMean,
    /// Prescribed values on the listed vertices.
    Dirichlet(Vec<(usize, f64)>),
}

/// The DEC operators of a well-centred complex.
#[derive(Debug, Clone)]
pub struct DecOperators {
    pub n: usize,
    pub counts: Vec<usize>,
    /// `d_k: Cᵏ → Cᵏ⁺¹` (transpose of `∂_{k+1}`), `k = 0..n`.
    pub d: Vec<CsrMatrix<f64>>,
    /// `d̲_k: P⁻¹Ωᵏ → P⁻¹Ωᵏ⁺¹`.
    pub ud: Vec<CsrMatrix<f64>>,
    /// `δ̲_k: P⁻¹Ωᵏ⁺¹ → P⁻¹Ωᵏ`.
    pub udelta: Vec<CsrMatrix<f64>>,
    /// `a_k·|*s|/|s|` per degree.
    pub cochain_weights: Vec<DVector<f64>>,
    /// `|U(s)|` per degree.
    pub form_weights: Vec<DVector<f64>>,
    /// `|s|` per degree.
    pub volumes: Vec<DVector<f64>>,
    /// `a_k = 1/binom(n,k)`.
    pub a: Vec<f64>,
    /// Per element: `(degree, index, |U(s)∩e|)` of each face.
    pub patches: Vec<Vec<(usize, usize, f64)>>,
}

fn check_len(v: &DVector<f64>, expected: usize) -> Result<(), DecError> {
    if v.len() == expected {
        Ok(())
    } else {
        Err(DecError::Length {
            expected,
            got: v.len(),
        })
    }
}

/// Assembles `d`, `d̲`, `δ̲` and the inner-product weights.
pub fn build_operators(c: &Complex, dv: &DualVolumes) -> Result<DecOperators, DecError> {
    let n = c.n();
    let counts = c.counts();
    for k in 0..=n {
        for (i, u) in dv.neighbourhood[k].iter().enumerate() {
            if *u <= 0.0 || dv.dual[k][i] <= 0.0 {
                return Err(DecError::ZeroDualVolume {
                    degree: k,
                    index: i,
                });
            }
        }
    }
    let vol: Vec<DVector<f64>> = dv
        .primal
        .iter()
        .map(|v| DVector::from_vec(v.clone()))
        .collect();
    let wform: Vec<DVector<f64>> = dv
        .neighbourhood
        .iter()
        .map(|v| DVector::from_vec(v.clone()))
        .collect();
    let a: Vec<f64> = (0..=n).map(|k| 1.0 / binom(n, k)).collect();
    let wcochain: Vec<DVector<f64>> = (0..=n)
        .map(|k| DVector::from_fn(counts[k], |i, _| a[k] * dv.dual[k][i] / dv.primal[k][i]))
        .collect();
    let mut d = Vec::new();
    let mut ud = Vec::new();
    let mut udelta = Vec::new();
    for k in 0..n {
        let bd = c.boundary_matrix(k + 1);
        let dt: Vec<(usize, usize, f64)> = bd
            .entries
            .iter()
            .map(|&(t, s, v)| (s, t, v as f64))
            .collect();
        d.push(linalg::csr_from_triplets(counts[k + 1], counts[k], &dt));
        let udt: Vec<(usize, usize, f64)> = dt
            .iter()
            .map(|&(s, t, v)| (s, t, v * vol[k][t] / vol[k + 1][s]))
            .collect();
        ud.push(linalg::csr_from_triplets(counts[k + 1], counts[k], &udt));
        let deltat: Vec<(usize, usize, f64)> = udt
            .iter()
            .map(|&(s, t, v)| (t, s, v * wform[k + 1][s] / wform[k][t]))
            .collect();
        udelta.push(linalg::csr_from_triplets(counts[k], counts[k + 1], &deltat));
    }
    let patches = dv
        .element_neighbourhood
        .iter()
        .enumerate()
        .map(|(e, local)| {
            local
                .iter()
                .enumerate()
                .skip(1)
                .map(|(mask, v)| (mask.count_ones() as usize - 1, c.local_face(e, mask), *v))
                .collect()
        })
        .collect();
    Ok(DecOperators {
        n,
        counts,
        d,
        ud,
        udelta,
        cochain_weights: wcochain,
        form_weights: wform,
        volumes: vol,
        a,
        patches,
    })
}

impl DecOperators {
    fn check_form(&self, f: &Pm1Form) -> Result<(), DecError> {
        if f.degree > self.n {
            return Err(DecError::Degree(f.degree));
        }
        check_len(&f.coeffs, self.counts[f.degree])
    }

    /// Cochain exterior derivative.
    pub fn apply_d(&self, a: &Cochain) -> Result<Cochain, DecError> {
        if a.degree >= self.n {
            return Err(DecError::Degree(a.degree));
        }
        check_len(&a.coeffs, self.counts[a.degree])?;
        Ok(Cochain {
            degree: a.degree + 1,
            coeffs: linalg::spmv(&self.d[a.degree], &a.coeffs),
        })
    }

    /// `d̲`.
    pub fn apply_ud(&self, f: &Pm1Form) -> Result<Pm1Form, DecError> {
        self.check_form(f)?;
        if f.degree >= self.n {
            return Err(DecError::Degree(f.degree));
        }
        Ok(Pm1Form {
            degree: f.degree + 1,
            coeffs: linalg::spmv(&self.ud[f.degree], &f.coeffs),
        })
    }

    /// `δ̲`.
    pub fn apply_udelta(&self, f: &Pm1Form) -> Result<Pm1Form, DecError> {
        self.check_form(f)?;
        if f.degree == 0 {
            return Err(DecError::Degree(0));
        }
        Ok(Pm1Form {
            degree: f.degree - 1,
            coeffs: linalg::spmv(&self.udelta[f.degree - 1], &f.coeffs),
        })
    }

    /// DEC inner product of cochains.
    pub fn inner_cochain(&self, a: &Cochain, b: &Cochain) -> f64 {
        a.coeffs
            .component_mul(&b.coeffs)
            .dot(&self.cochain_weights[a.degree])
    }

    /// `L²` inner product of piecewise-constant forms.
    pub fn inner_pm1(&self, a: &Pm1Form, b: &Pm1Form) -> f64 {
        a.coeffs
            .component_mul(&b.coeffs)
            .dot(&self.form_weights[a.degree])
    }

    /// Cochain codifferential `δ = W_{k−1}⁻¹ dᵀ W_k`, mapping `Cᵏ → Cᵏ⁻¹`.
    pub fn apply_delta(&self, a: &Cochain) -> Result<Cochain, DecError> {
        if a.degree == 0 || a.degree > self.n {
            return Err(DecError::Degree(a.degree));
        }
        let k = a.degree;
        let weighted = a.coeffs.component_mul(&self.cochain_weights[k]);
        let t = self.d[k - 1].transpose();
        let out = linalg::spmv(&t, &weighted).component_div(&self.cochain_weights[k - 1]);
        Ok(Cochain {
            degree: k - 1,
            coeffs: out,
        })
    }

    /// Degree-0 stiffness `d̲ᵀ W₁ d̲`.
    pub fn laplacian_degree0(&self) -> CsrMatrix<f64> {
        weighted_normal_matrix(&self.ud[0], &self.form_weights[1])
    }

    /// Dense weighted Hodge Laplacian `δ̲d̲ + d̲δ̲` on degree `k`.
    pub fn hodge_laplacian_dense(&self, k: usize) -> DMatrix<f64> {
        let m = self.counts[k];
        let mut l = DMatrix::zeros(m, m);
        if k < self.n {
            l += linalg::to_dense(&self.udelta[k]) * linalg::to_dense(&self.ud[k]);
        }
        if k > 0 {
            l += linalg::to_dense(&self.ud[k - 1]) * linalg::to_dense(&self.udelta[k - 1]);
        }
        l
    }

    /// `#Kᵏ − rank d̲_k − rank d̲_{k−1}`, the dimension of the discrete
    /// harmonic space.
    pub fn harmonic_dimension(&self, k: usize) -> usize {
        let rank = |m: &CsrMatrix<f64>| linalg::numerical_rank(&linalg::to_dense(m), 1e-10);
        let mut dim = self.counts[k] as i64;
        if k < self.n {
            dim -= rank(&self.ud[k]) as i64;
        }
        if k > 0 {
            dim -= rank(&self.ud[k - 1]) as i64;
        }
        dim.max(0) as usize
    }
}

/// `Aᵀ diag(w) A`.
fn weighted_normal_matrix(a: &CsrMatrix<f64>, w: &DVector<f64>) -> CsrMatrix<f64> {
    let mut trip = Vec::new();
    for (r, row) in a.row_iter().enumerate() {
        let cols = row.col_indices();
        let vals = row.values();
        for (i, &ci) in cols.iter().enumerate() {
            for (j, &cj) in cols.iter().enumerate() {
                trip.push((ci, cj, w[r] * vals[i] * vals[j]));
            }
        }
    }
    linalg::csr_from_triplets(a.ncols(), a.ncols(), &trip)
}

/// The isometric cochain map `i_k: f^s ↦ ω^s/|s|`.
pub fn cochain_to_pm1(a: &Cochain, ops: &DecOperators) -> Pm1Form {
    Pm1Form {
        degree: a.degree,
        coeffs: a.coeffs.component_div(&ops.volumes[a.degree]),
    }
}

/// Inverse of [`cochain_to_pm1`].
pub fn pm1_to_cochain(f: &Pm1Form, ops: &DecOperators) -> Cochain {
    Cochain {
        degree: f.degree,
        coeffs: f.coeffs.component_mul(&ops.volumes[f.degree]),
    }
}

/// Both sides of the discrete Stokes formula on the `(k+1)`-simplex `s`:
/// `(d̲α)_s·|s|` and `Σ_t ∂_s^t α_t |t|`.
pub fn stokes_check(
    c: &Complex,
    ops: &DecOperators,
    alpha: &Pm1Form,
    s: usize,
) -> Result<(f64, f64), DecError> {
    let k = alpha.degree;
    let da = ops.apply_ud(alpha)?;
    let lhs = da.coeffs[s] * ops.volumes[k + 1][s];
    let key = &c.simplices(k + 1)[s];
    let mut rhs = 0.0;
    for i in 0..key.len() {
        let mut face = key.clone();
        face.remove(i);
        let t = c.index_of(&face).expect("face of a simplex of the complex");
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        rhs += sign * alpha.coeffs[t] * ops.volumes[k][t];
    }
    Ok((lhs, rhs))
}

/// A smooth `k`-form on the ambient space of a flat (embedded) complex.
pub trait FormSampler: Sync {
    fn degree(&self) -> usize;
    /// The form at `x` applied to `k` vectors.
    fn eval(&self, x: &[f64], vectors: &[Vec<f64>]) -> f64;
    /// Its exterior derivative at `x` applied to `k+1` vectors.
    fn eval_d(&self, x: &[f64], vectors: &[Vec<f64>]) -> f64;
}

/// A smooth function with its gradient.
pub struct ScalarForm<F, G> {
    pub f: F,
    pub grad: G,
}

impl<F, G> FormSampler for ScalarForm<F, G>
where
    F: Fn(&[f64]) -> f64 + Sync,
    G: Fn(&[f64]) -> Vec<f64> + Sync,
{
    fn degree(&self) -> usize {
        0
    }

    fn eval(&self, x: &[f64], _: &[Vec<f64>]) -> f64 {
        (self.f)(x)
    }

    fn eval_d(&self, x: &[f64], v: &[Vec<f64>]) -> f64 {
        (self.grad)(x).iter().zip(&v[0]).map(|(a, b)| a * b).sum()
    }
}

/// A constant 1-form `α(v) = a·v` (closed).
pub struct ConstantCovector(pub Vec<f64>);

impl FormSampler for ConstantCovector {
    fn degree(&self) -> usize {
        1
    }

    fn eval(&self, _: &[f64], v: &[Vec<f64>]) -> f64 {
        self.0.iter().zip(&v[0]).map(|(a, b)| a * b).sum()
    }

    fn eval_d(&self, _: &[f64], _: &[Vec<f64>]) -> f64 {
        0.0
    }
}

/// A 1-form `α_x(v) = a(x)·v` with `dα_x(v,w) = curl(x, v, w)`.
pub struct CovectorField<A, C> {
    pub a: A,
    pub curl: C,
}

impl<A, C> FormSampler for CovectorField<A, C>
where
    A: Fn(&[f64]) -> Vec<f64> + Sync,
    C: Fn(&[f64], &[f64], &[f64]) -> f64 + Sync,
{
    fn degree(&self) -> usize {
        1
    }

    fn eval(&self, x: &[f64], v: &[Vec<f64>]) -> f64 {
        (self.a)(x).iter().zip(&v[0]).map(|(a, b)| a * b).sum()
    }

    fn eval_d(&self, x: &[f64], v: &[Vec<f64>]) -> f64 {
        (self.curl)(x, &v[0], &v[1])
    }
}

/// Result of [`project_to_pm1`].
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub form: Pm1Form,
    /// Largest condition number among the per-element moment systems.
    pub max_condition: f64,
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// `⟨X, Y⟩` of the `k`-vectors `x₁∧…∧x_k` and `y₁∧…∧y_k`: `det(xᵢ·yⱼ)`.
fn wedge_inner(x: &[Vec<f64>], y: &[Vec<f64>]) -> f64 {
    let k = x.len();
    if k == 0 {
        return 1.0;
    }
    DMatrix::from_fn(k, k, |i, j| {
        x[i].iter().zip(&y[j]).map(|(a, b)| a * b).sum::<f64>()
    })
    .determinant()
}

fn edge_vectors(coords: &[Vec<f64>], key: &[usize]) -> Vec<Vec<f64>> {
    key[1..]
        .iter()
        .map(|&v| {
            coords[v]
                .iter()
                .zip(&coords[key[0]])
                .map(|(a, b)| a - b)
                .collect()
        })
        .collect()
}

/// Projects a smooth `k`-form onto `P⁻¹Ωᵏ`.
///
/// Per element `e`, coefficients `α̃_{t,e}` are fixed by the moment equations
/// `∫_e α̃(E_I) = ∫_e f(E_I)` and `∫_e (d̲α̃)(E_J) = ∫_e df(E_J)` for the
/// wedges `E_I` of edge vectors from the element's first vertex; the results
/// are then averaged, `α_t = Σ_e |U(t)∩e| α̃_{t,e} / |U(t)|`.  `coords` are the
/// flat ambient vertex positions; they must realize the metric of `dv`.
pub fn project_to_pm1(
    f: &dyn FormSampler,
    c: &Complex,
    coords: &[Vec<f64>],
    dv: &DualVolumes,
    quad_degree: usize,
) -> Result<Projection, DecError> {
    let n = c.n();
    let k = f.degree();
    if k > n {
        return Err(DecError::Degree(k));
    }
    let rule = quadrature::grundmann_moller(n, quad_degree);
    let full = (1usize << (n + 1)) - 1;
    let masks_k: Vec<usize> = (1..=full)
        .filter(|m| m.count_ones() as usize == k + 1)
        .collect();
    let masks_k1: Vec<usize> = (1..=full)
        .filter(|m| m.count_ones() as usize == k + 2)
        .collect();
    let rows_i = combinations(n, k);
    let rows_j = if k < n {
        combinations(n, k + 1)
    } else {
        Vec::new()
    };
    let fact = |m: usize| -> f64 { (1..=m).map(|i| i as f64).product() };
    let mut acc = DVector::zeros(c.count(k));
    let mut max_condition = 0.0f64;

    for e in 0..c.count(n) {
        let key = &c.simplices(n)[e];
        let base = edge_vectors(coords, key);
        let vol_e = dv.primal[n][e];
        let local = &dv.element_neighbourhood[e];
        let nq = masks_k.len();
        let mut sys = DMatrix::zeros(nq, nq);
        let mut rhs = DVector::zeros(nq);
        let pick =
            |idx: &[usize]| -> Vec<Vec<f64>> { idx.iter().map(|&i| base[i].clone()).collect() };
        let sample_points: Vec<Vec<f64>> = rule
            .nodes
            .iter()
            .map(|l| {
                let mut x = vec![0.0; coords[0].len()];
                for (a, &v) in key.iter().enumerate() {
                    x.iter_mut()
                        .zip(&coords[v])
                        .for_each(|(xi, ci)| *xi += l[a] * ci);
                }
                x
            })
            .collect();
        for (row, idx) in rows_i.iter().enumerate() {
            let ei = pick(idx);
            for (col, &mask) in masks_k.iter().enumerate() {
                let t: Vec<usize> = (0..=n)
                    .filter(|a| mask >> a & 1 == 1)
                    .map(|a| key[a])
                    .collect();
                let tv = edge_vectors(coords, &t);
                let vol_t = dv.primal[k][c.local_face(e, mask)];
                sys[(row, col)] = local[mask] * wedge_inner(&ei, &tv) / (fact(k) * vol_t);
            }
            rhs[row] = vol_e
                * rule
                    .nodes
                    .iter()
                    .zip(&rule.weights)
                    .zip(&sample_points)
                    .map(|((_, w), x)| w * f.eval(x, &ei))
                    .sum::<f64>();
        }
        for (jrow, idx) in rows_j.iter().enumerate() {
            let row = rows_i.len() + jrow;
            let ej = pick(idx);
            for &smask in &masks_k1 {
                let s: Vec<usize> = (0..=n)
                    .filter(|a| smask >> a & 1 == 1)
                    .map(|a| key[a])
                    .collect();
                let sv = edge_vectors(coords, &s);
                let s_idx = c.local_face(e, smask);
                let vol_s = dv.primal[k + 1][s_idx];
                let moment = local[smask] * wedge_inner(&ej, &sv) / (fact(k + 1) * vol_s);
                // (d̲α̃)_s = Σ_t (|t|/|s|) ∂_s^t α̃_t over the facets t of s
                let positions: Vec<usize> = (0..=n).filter(|a| smask >> a & 1 == 1).collect();
                for (i, &pos) in positions.iter().enumerate() {
                    let tmask = smask & !(1 << pos);
                    let col = masks_k
                        .iter()
                        .position(|&m| m == tmask)
                        .expect("facet mask");
                    let vol_t = dv.primal[k][c.local_face(e, tmask)];
                    let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                    sys[(row, col)] += moment * sign * vol_t / vol_s;
                }
            }
            rhs[row] = vol_e
                * rule
                    .weights
                    .iter()
                    .zip(&sample_points)
                    .map(|(w, x)| w * f.eval_d(x, &ej))
                    .sum::<f64>();
        }
        let svd = sys.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        let condition = if smin > 0.0 {
            smax / smin
        } else {
            f64::INFINITY
        };
        if !(smin > 1e-12 * smax) {
            return Err(DecError::RankDeficient {
                element: e,
                condition,
            });
        }
        max_condition = max_condition.max(condition);
        let sol = svd.solve(&rhs, 0.0).expect("factors computed");
        for (col, &mask) in masks_k.iter().enumerate() {
            acc[c.local_face(e, mask)] += local[mask] * sol[col];
        }
    }
    let coeffs = acc.component_div(&DVector::from_vec(dv.neighbourhood[k].clone()));
    Ok(Projection {
        form: Pm1Form { degree: k, coeffs },
        max_condition,
    })
}

/// Solves `⟨d̲u, d̲v⟩ = ⟨f, v⟩` for `u ∈ P⁻¹Ω⁰` under the boundary condition.
pub fn poisson_pm1(
    ops: &DecOperators,
    f: &Pm1Form,
    bc: &BoundaryCondition,
) -> Result<Pm1Form, DecError> {
    if f.degree != 0 {
        return Err(DecError::Degree(f.degree));
    }
    check_len(&f.coeffs, ops.counts[0])?;
    let s = ops.laplacian_degree0();
    let w = &ops.form_weights[0];
    let rhs = f.coeffs.component_mul(w);
    let u = match bc {
        BoundaryCondition::ZeroMean => {
            let total = rhs.sum();
            if total.abs() > 1e-10 * (rhs.abs().sum() + f64::MIN_POSITIVE) {
                return Err(DecError::Incompatible(total));
            }
            linalg::solve_zero_mean(&s, &rhs, w)?
        }
        BoundaryCondition::Dirichlet(fixed) => linalg::solve_dirichlet(&s, &rhs, fixed)?,
    };
    Ok(Pm1Form {
        degree: 0,
        coeffs: u,
    })
}

/// `Σ_{e ∈ region} Σ_{s ⊂ e} |U(s)∩e|·ω_s²` for a form of any degree.
pub fn form_energy(ops: &DecOperators, w: &Pm1Form, region: &[usize]) -> f64 {
    region
        .iter()
        .flat_map(|&e| ops.patches[e].iter())
        .filter(|(k, _, _)| *k == w.degree)
        .map(|(_, i, v)| v * w.coeffs[*i].powi(2))
        .sum()
}

/// Dirichlet energy `‖d̲u‖²` of a degree-0 form restricted to `region`.
pub fn dirichlet_energy_pm1(
    ops: &DecOperators,
    u: &Pm1Form,
    region: &[usize],
) -> Result<f64, DecError> {
    let du = ops.apply_ud(u)?;
    Ok(form_energy(ops, &du, region))
}

/// The three parts of a Hodge decomposition with diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct HodgeParts {
    /// Potential `a_h ∈ P⁻¹Ωᵏ⁻¹` (zero-length for `k = 0`).
    pub a: Pm1Form,
    /// Copotential `b_h ∈ P⁻¹Ωᵏ⁺¹` (zero-length for `k = n`).
    pub b: Pm1Form,
    pub exact: Pm1Form,
    pub coexact: Pm1Form,
    pub harmonic: Pm1Form,
    /// `‖u − (d̲a + δ̲b + c)‖`.
    pub reassembly_residual: f64,
    /// Largest absolute pairwise inner product of the three parts.
    pub orthogonality_residual: f64,
    /// `max(‖d̲c‖, ‖δ̲c‖)`.
    pub harmonic_residual: f64,
}

/// Weighted least squares `min ‖W^{1/2}(u − A x)‖`.
fn weighted_lstsq(
    a: &CsrMatrix<f64>,
    w: &DVector<f64>,
    u: &DVector<f64>,
) -> Result<DVector<f64>, DecError> {
    let sw = w.map(f64::sqrt);
    if a.ncols() <= DENSE_LS_LIMIT {
        let mut dense = linalg::to_dense(a);
        for (r, mut row) in dense.row_iter_mut().enumerate() {
            row *= sw[r];
        }
        Ok(linalg::lstsq(&dense, &u.component_mul(&sw), 1e-12))
    } else {
        // consistent singular normal equations; CG from zero stays in the
        // range and converges to the minimum-norm solution
        let normal = weighted_normal_matrix(a, w);
        let rhs = linalg::spmv(&a.transpose(), &u.component_mul(w));
        Ok(linalg::pcg(&normal, &rhs, 1e-13, 50 * a.ncols())?.0)
    }
}

/// Hodge decomposition `u = d̲a + δ̲b + c` in `P⁻¹Ωᵏ`.
pub fn hodge_pm1(ops: &DecOperators, u: &Pm1Form) -> Result<HodgeParts, DecError> {
    ops.check_form(u)?;
    let k = u.degree;
    let m = ops.counts[k];
    let w = &ops.form_weights[k];
    let (a, exact) = if k > 0 {
        let a = weighted_lstsq(&ops.ud[k - 1], w, &u.coeffs)?;
        let ex = linalg::spmv(&ops.ud[k - 1], &a);
        (a, ex)
    } else {
        (DVector::zeros(0), DVector::zeros(m))
    };
    let (b, coexact) = if k < ops.n {
        let b = weighted_lstsq(&ops.udelta[k], w, &u.coeffs)?;
        let co = linalg::spmv(&ops.udelta[k], &b);
        (b, co)
    } else {
        (DVector::zeros(0), DVector::zeros(m))
    };
    let harmonic = &u.coeffs - &exact - &coexact;
    let ip = |x: &DVector<f64>, y: &DVector<f64>| x.component_mul(y).dot(w);
    let orthogonality_residual = ip(&exact, &coexact)
        .abs()
        .max(ip(&exact, &harmonic).abs())
        .max(ip(&coexact, &harmonic).abs());
    let mut harmonic_residual = 0.0f64;
    if k < ops.n {
        harmonic_residual = harmonic_residual.max(linalg::spmv(&ops.ud[k], &harmonic).amax());
    }
    if k > 0 {
        harmonic_residual =
            harmonic_residual.max(linalg::spmv(&ops.udelta[k - 1], &harmonic).amax());
    }
    let reassembly_residual = (&u.coeffs - (&exact + &coexact + &harmonic)).amax();
    let form = |degree: usize, coeffs: DVector<f64>| Pm1Form { degree, coeffs };
    Ok(HodgeParts {
        a: form(k.saturating_sub(1), a),
        b: form((k + 1).min(ops.n), b),
        exact: form(k, exact),
        coexact: form(k, coexact),
        harmonic: form(k, harmonic),
        reassembly_residual,
        orthogonality_residual,
        harmonic_residual,
    })
}

/// Convenience: subdivision, dual volumes and operators in one go.
pub fn operators_for(
    c: &Complex,
    m: &DiscreteMetric,
) -> Result<(DualVolumes, DecOperators), crate::complex::ComplexError> {
    let sub = crate::complex::subdivide(c, m)?;
    let dv = crate::complex::dual_volumes(c, m, &sub)?;
    let ops =
        build_operators(c, &dv).map_err(|_| crate::complex::ComplexError::NotWellCentred {
            key: Vec::new(),
            min_coordinate: 0.0,
        })?;
    Ok((dv, ops))
}
