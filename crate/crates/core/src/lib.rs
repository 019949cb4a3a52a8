//! Block coordinate descent on the Stiefel manifold.
//!
//! The solver minimizes `F(X) = f(X) + h(X)` subject to `XᵀX = I` by updating
//! two rows of `X` per iteration with a 2×2 orthogonal matrix (a Givens
//! rotation or a Jacobi reflection). Every iterate stays exactly feasible up
//! to floating point rounding.
//!
//! Modules:
//! - [`linalg`]: dense matrices, Stiefel points, planar updates and the
//!   Jacobi-Givens decomposition of orthogonal matrices.
//! - [`quartic`]: closed-form real roots of polynomials up to degree four.
//! - [`subproblem`]: the two-row subproblem, solved globally by breakpoint
//!   search or to a descent critical point by a fifth-order iteration.
//! - [`working_set`]: random, cyclic and greedy working-set selection.
//! - [`problems`]: sparse PCA variants, nonnegative PCA and a nonlinear
//!   eigenvalue problem, plus initializers and data loading.
//! - [`driver`]: the outer loop, traces and stationarity diagnostics.
//! - [`cli`]: the `obcd` command line tool.

pub mod cli;
pub mod driver;
pub mod error;
pub mod linalg;
pub mod problems;
pub mod quartic;
pub mod subproblem;
pub mod working_set;

pub use driver::{obcd_run, SolverConfig, SolverMode, Trace, TraceRecord};
pub use error::{Error, Result};
pub use linalg::{Branch, DenseMatrix, PlanarOrthogonal, StiefelPoint, WorkingSet};
pub use problems::Problem;
pub use subproblem::RegularizerSpec;
