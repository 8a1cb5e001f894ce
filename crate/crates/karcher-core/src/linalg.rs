//! Sparse assembly and the linear solvers shared by the DEC and FEM modules.
//!
//! Symmetric positive definite systems are factorized densely when small and
//! solved by Jacobi-preconditioned conjugate gradients otherwise.  Both paths
//! are single-threaded and deterministic.

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::{CooMatrix, CsrMatrix};
use thiserror::Error;

/// Systems up to this many unknowns are factorized densely.
pub const DENSE_LIMIT: usize = 2000;

/// Relative residual targeted by the iterative solver.
pub const CG_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("conjugate gradients stalled after {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Assembles a CSR matrix, summing duplicate entries.
pub fn csr_from_triplets(
    rows: usize,
    cols: usize,
    triplets: &[(usize, usize, f64)],
) -> CsrMatrix<f64> {
    let mut coo = CooMatrix::new(rows, cols);
    for &(r, c, v) in triplets {
        coo.push(r, c, v);
    }
    CsrMatrix::from(&coo)
}

/// `A x`.
pub fn spmv(a: &CsrMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
    let mut y = DVector::zeros(a.nrows());
    for (i, row) in a.row_iter().enumerate() {
        y[i] = row
            .col_indices()
            .iter()
            .zip(row.values())
            .map(|(&j, v)| v * x[j])
            .sum();
    }
    y
}

/// Dense copy of a sparse matrix.
pub fn to_dense(a: &CsrMatrix<f64>) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(a.nrows(), a.ncols());
    for (i, row) in a.row_iter().enumerate() {
        for (&j, v) in row.col_indices().iter().zip(row.values()) {
            d[(i, j)] += v;
        }
    }
    d
}

/// Diagonal of a square sparse matrix.
pub fn diagonal(a: &CsrMatrix<f64>) -> DVector<f64> {
    let mut d = DVector::zeros(a.nrows());
    for (i, row) in a.row_iter().enumerate() {
        for (&j, v) in row.col_indices().iter().zip(row.values()) {
            if i == j {
                d[i] += v;
            }
        }
    }
    d
}

/// Row sums of a sparse matrix.
pub fn row_sums(a: &CsrMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(a.nrows(), a.row_iter().map(|r| r.values().iter().sum()))
}

/// Keeps the rows and columns listed in `keep`, in that order.
pub fn submatrix(a: &CsrMatrix<f64>, keep: &[usize]) -> CsrMatrix<f64> {
    let mut map = vec![usize::MAX; a.ncols()];
    for (new, &old) in keep.iter().enumerate() {
        map[old] = new;
    }
    let mut trip = Vec::new();
    for (new_r, &old_r) in keep.iter().enumerate() {
        let row = a.row(old_r);
        for (&j, &v) in row.col_indices().iter().zip(row.values()) {
            if map[j] != usize::MAX {
                trip.push((new_r, map[j], v));
            }
        }
    }
    csr_from_triplets(keep.len(), keep.len(), &trip)
}

/// Jacobi-preconditioned conjugate gradients.
pub fn pcg(
    a: &CsrMatrix<f64>,
    b: &DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<(DVector<f64>, usize), SolveError> {
    let n = b.len();
    let diag = diagonal(a);
    if diag.iter().any(|d| *d <= 0.0) {
        return Err(SolveError::NotPositiveDefinite);
    }
    let bnorm = b.norm();
    let mut x = DVector::zeros(n);
    if bnorm == 0.0 {
        return Ok((x, 0));
    }
    let mut r = b.clone();
    let mut z = r.component_div(&diag);
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    for it in 1..=max_iter {
        let ap = spmv(a, &p);
        let pap = p.dot(&ap);
        if pap <= 0.0 {
            return Err(SolveError::NotPositiveDefinite);
        }
        let alpha = rz / pap;
        x.axpy(alpha, &p, 1.0);
        r.axpy(-alpha, &ap, 1.0);
        if r.norm() <= tol * bnorm {
            return Ok((x, it));
        }
        z = r.component_div(&diag);
        let rz_new = r.dot(&z);
        p = &z + &p * (rz_new / rz);
        rz = rz_new;
    }
    // recompute the true residual before giving up
    let res = (b - spmv(a, &x)).norm() / bnorm;
    if res <= 10.0 * tol {
        return Ok((x, max_iter));
    }
    Err(SolveError::NoConvergence {
        iterations: max_iter,
        residual: res,
    })
}

/// A reusable solver for a symmetric positive definite sparse matrix.
pub enum SpdSolver {
    Dense(nalgebra::Cholesky<f64, nalgebra::Dyn>),
    Iterative(CsrMatrix<f64>),
}

impl SpdSolver {
    pub fn new(a: &CsrMatrix<f64>) -> Result<Self, SolveError> {
        if a.nrows() != a.ncols() {
            return Err(SolveError::Dimension("matrix is not square".into()));
        }
        if a.nrows() <= DENSE_LIMIT {
            to_dense(a)
                .cholesky()
                .map(SpdSolver::Dense)
                .ok_or(SolveError::NotPositiveDefinite)
        } else {
            Ok(SpdSolver::Iterative(a.clone()))
        }
    }

    pub fn solve(&self, b: &DVector<f64>) -> Result<DVector<f64>, SolveError> {
        match self {
            SpdSolver::Dense(ch) => Ok(ch.solve(b)),
            SpdSolver::Iterative(a) => pcg(a, b, CG_TOL, 20 * a.nrows() + 100).map(|r| r.0),
        }
    }
}

/// Solves `A x = b` for symmetric positive definite `A`.
pub fn solve_spd(a: &CsrMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>, SolveError> {
    SpdSolver::new(a)?.solve(b)
}

/// Solves a positive semidefinite system whose kernel is the constants, with
/// a compatible right-hand side, returning the solution with zero
/// `weights`-mean.  The first unknown is pinned to zero (which selects one
/// member of the solution family of the compatible system) and the mean is
/// removed afterwards.
pub fn solve_zero_mean(
    a: &CsrMatrix<f64>,
    b: &DVector<f64>,
    weights: &DVector<f64>,
) -> Result<DVector<f64>, SolveError> {
    let n = b.len();
    if n == 1 {
        return Ok(DVector::zeros(1));
    }
    let keep: Vec<usize> = (1..n).collect();
    let reduced = submatrix(a, &keep);
    let rb = DVector::from_iterator(n - 1, keep.iter().map(|&i| b[i]));
    let y = solve_spd(&reduced, &rb)?;
    let mut x = DVector::zeros(n);
    for (k, &i) in keep.iter().enumerate() {
        x[i] = y[k];
    }
    let mean = x.dot(weights) / weights.sum();
    x.add_scalar_mut(-mean);
    Ok(x)
}

/// Solves `A x = b` with the unknowns in `fixed` prescribed; `A` symmetric
/// positive definite on the free block.
pub fn solve_dirichlet(
    a: &CsrMatrix<f64>,
    b: &DVector<f64>,
    fixed: &[(usize, f64)],
) -> Result<DVector<f64>, SolveError> {
    let n = b.len();
    let mut x = DVector::zeros(n);
    let mut is_fixed = vec![false; n];
    for &(i, v) in fixed {
        x[i] = v;
        is_fixed[i] = true;
    }
    let free: Vec<usize> = (0..n).filter(|i| !is_fixed[*i]).collect();
    if free.is_empty() {
        return Ok(x);
    }
    let ax = spmv(a, &x);
    let rb = DVector::from_iterator(free.len(), free.iter().map(|&i| b[i] - ax[i]));
    let y = solve_spd(&submatrix(a, &free), &rb)?;
    for (k, &i) in free.iter().enumerate() {
        x[i] = y[k];
    }
    Ok(x)
}

/// Numerical rank from singular values, relative to the largest one.
pub fn numerical_rank(a: &DMatrix<f64>, rel_tol: f64) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let sv = a.clone().svd(false, false).singular_values;
    let max = sv.max();
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > rel_tol * max).count()
}

/// Minimum-norm least-squares solution through the pseudo-inverse.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>, rel_tol: f64) -> DVector<f64> {
    let svd = a.clone().svd(true, true);
    let eps = rel_tol * svd.singular_values.max().max(f64::MIN_POSITIVE);
    let solve = |rhs: &DVector<f64>| {
        svd.solve(rhs, eps)
            .expect("both singular factors were computed")
    };
    let mut x = solve(b);
    // iterative refinement recovers the accuracy lost to slowly converged
    // singular vectors on rank-deficient inputs
    for _ in 0..3 {
        x += solve(&(b - a * &x));
    }
    x
}
