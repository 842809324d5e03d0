//! Semidefinite programming over Hermitian matrix blocks.
//!
//! Problems are built from [`Expr`]essions (affine maps of the blocks written
//! as sums of sandwiches `c·L X R`), compiled to a real conic standard form and
//! solved by a first-order splitting method. [`check_kkt`] recomputes the
//! residuals of a returned solution from the problem data alone.

mod audit;
mod kkt;
mod problem;
mod solver;
pub(crate) mod standard;

pub use audit::{solve_checked, start_recording, take_records, SolveRecord, RESIDUAL_AGREEMENT};
pub use kkt::check_kkt;
pub use problem::{BlockId, BlockSpec, Equality, Expr, LinMap, PsdConstraint, SdpProblem, Sense};
pub use solver::{solve_sdp, Residuals, SdpSolution, SdpStatus, SolverConfig};
