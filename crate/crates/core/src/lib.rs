//! Solvers for the vanishing moment regularization of fully nonlinear
//! second order equations: radial and mixed finite element discretizations,
//! Newton continuation, boundary-layer surgery and a rate harness.

pub mod error;
pub mod fem;
pub mod harness;
pub mod mesh;
pub mod mixed;
pub mod newton;
pub mod nonlinearity;
pub mod radial;
pub mod sparse;
pub mod surgery;

pub use error::{Result, VmmError};
