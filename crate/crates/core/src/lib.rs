//! Weak Galerkin mixed finite elements on polygonal meshes.
//!
//! The crate discretizes the first-order system
//!
//! ```text
//!   alpha q + grad u = 0,   div q = f   in Omega,     u = -g on the boundary,
//! ```
//!
//! with the `([P_k]^2, P_k(e), P_{k+1})` weak Galerkin element: cellwise
//! polynomial fluxes, a scalar normal flux per edge, and a discontinuous
//! scalar of one degree higher. The divergence is replaced by a discrete weak
//! divergence computed cell by cell, and the flux mass form is stabilized by
//! a penalty on the mismatch between interior normal traces and edge values.
//!
//! Module map:
//!
//! * [`mesh`]: polygonal meshes, generators, shape-regularity diagnostics, file IO.
//! * [`quadrature`]: Gauss rules on segments and fan-triangulated polygons.
//! * [`basis`]: scaled (orthonormalized) monomial bases on cells, Legendre bases on edges.
//! * [`space`]: per-cell/per-edge caches, the degree-of-freedom layout and field types.
//! * [`projection`]: local L2 projections of smooth fields.
//! * [`weakdiv`]: the discrete weak divergence.
//! * [`forms`]: bilinear forms, load functionals and the saddle-point system.
//! * [`solver`]: direct, Schur-complement CG and MINRES solvers.
//! * [`analysis`]: norms, manufactured solutions, error measures, identity checks and
//!   convergence studies.
//! * [`cli`]: run configuration and the command driver used by the `wgmfem` binary.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod analysis;
pub mod basis;
pub mod cli;
mod error;
pub mod forms;
pub mod mesh;
pub mod projection;
pub mod quadrature;
pub mod solver;
pub mod space;
pub mod weakdiv;

pub use error::{Error, Result};

/// Points and vectors in the plane.
pub type Point = nalgebra::Point2<f64>;
pub type Vector = nalgebra::Vector2<f64>;
