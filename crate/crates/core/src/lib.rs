//! Smallest eigenpairs and eigenspaces of thin cylindrical shells of revolution
//! with a parametric (affine) Young's modulus.
//!
//! The crate provides the building blocks for two solution strategies applied to
//! the generalized matrix eigenvalue problem `K(xi) y = lambda M y` on the
//! parameter box `[-1,1]^M`:
//!
//! * anisotropic sparse-grid stochastic collocation ([`collocation`]), and
//! * stochastic Galerkin spectral inverse / subspace iteration ([`spectral`]).
//!
//! Supporting modules: finitely supported multi-indices and monotone index sets
//! ([`multiindex`]), normalized Legendre polynomials, Gauss rules and moment
//! matrices ([`polychaos`]), the affine random Young's modulus ([`randomfield`]),
//! the p-version shell finite element discretization ([`shellfem`]) and a
//! deterministic generalized symmetric eigensolver ([`eigsolve`]).

pub mod collocation;
pub mod eigsolve;
pub mod linalg;
pub mod multiindex;
pub mod polychaos;
pub mod randomfield;
pub mod shellfem;
pub mod spectral;
pub(crate) mod util;
