//! Compressed-row matrices and a direct sparse LU solver.

pub mod backend;
pub mod csr;
pub mod lu;

pub use backend::{Factorization, LuBackend};
pub use csr::{PatternBuilder, SparseMatrix};
pub use lu::{fill_reducing_order, norm2, solve, LinearSolveReport, Ordering, SparseLu};
