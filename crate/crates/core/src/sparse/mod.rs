//! Linearization, normal equations, and sparse linear solvers.

mod cholesky;
mod linearize;
mod market;
mod matrix;
mod ordering;
mod pcg;

pub use cholesky::{sparse_cholesky, solve_normal, CholeskyFactor, SymbolicCholesky, PIVOT_TOLERANCE};
pub use linearize::{assemble_normal, linearize, BlockSparsityPattern, LinearSystem};
pub use market::write_matrix_market;
pub use matrix::SparseMatrix;
pub use ordering::{amd_ordering, Permutation};
pub use pcg::{pcg_solve, PcgSolution};
