//! Solver library for the multidimensional steady-state radiative transfer
//! equation in second-order (even-parity) form.
//!
//! The discrete system is a Kronecker-structured SPD linear system coupling a
//! 2D spatial finite-difference discretization with a Chebyshev–Legendre
//! discrete-ordinates quadrature on the half sphere. The outer driver is an
//! inexact source iteration with diffusion synthetic acceleration (SI-DSA);
//! each source-iteration step is solved by a preconditioned conjugate gradient
//! method that keeps every iterate in a low-rank format — either a rank-r
//! matrix factorization of the (space × angle) unknown or a hierarchical
//! Tucker tensor that further splits the angular variables. A conventional
//! full-rank pipeline with per-angle solves is included as a reference.

pub mod angular;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod lowrank;
pub mod operators;
pub mod problems;
pub mod sparse;

pub use angular::AngularQuadrature;
pub use error::{Error, Result};
pub use geometry::SpatialGrid;
pub use operators::{KroneckerOperator, PhaseDims};
pub use problems::{MaterialSamples, ProblemSpec};
