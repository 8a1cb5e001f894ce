//! Karcher-mean barycentric simplices on model Riemannian manifolds,
//! simplicial complexes with discrete Riemannian metrics, a piecewise-constant
//! realization of discrete exterior calculus and P1 finite elements.

pub mod complex;
pub mod dec;
pub mod fem;
pub mod io;
pub mod karcher;
pub mod linalg;
pub mod manifold;
pub mod meshes;
pub mod quadrature;
pub mod simplex;
