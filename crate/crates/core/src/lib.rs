//! Adaptive primal-dual gradient methods built on `(delta, L)`-models.
//!
//! The solvers minimize a convex objective over a ground set intersected with
//! affine inequalities, recover Lagrange multipliers along the way, and emit
//! a computable upper bound on the duality gap `f(x) + g(z)`.

pub mod argdual;
pub mod error;
pub mod io;
pub mod linalg;
pub mod model;
pub mod problem;
pub mod problems;
pub mod prox;
pub mod qp;
pub mod solvers;

pub use error::{Error, Result};
pub use linalg::dot;
pub use problem::{eval_constraints, AffineConstraints, GroundSet, ProblemSpec, QuadraticObjective, SmoothFunction};

pub use nalgebra::{DMatrix, DVector};
