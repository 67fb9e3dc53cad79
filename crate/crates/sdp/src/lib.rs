//! Small-block semidefinite programs: model, SDPA I/O and a primal-dual
//! interior-point solver.

pub mod error;
mod kkt;
pub mod problem;
pub mod program;
pub mod sdpa;
pub mod solver;
pub mod validate;

pub use error::{Result, SdpError};
pub use problem::{min_eigenvalue, BlockEntry, ConstraintKind, LinearConstraint, PsdBlock, SdpProblem};
pub use program::ConeProgram;
pub use solver::{solve, solve_program, Residuals, SolverConfig, SolverResult, SolverStatus};
pub use validate::{validate_kkt, KktReport};
