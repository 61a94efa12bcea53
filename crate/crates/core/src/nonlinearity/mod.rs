//! Nonlinear operators, their linearizations and problem definitions.

pub mod cofactor;
pub mod operators;
pub mod problem;

pub use cofactor::{cofactor, cofactor_divergence_residual, det, trace, Poly2, Sym2};
pub use operators::{
    Gamma, GaussCurvature, InfinityLaplacian, LinearizationBlocks, MongeAmpere, NonlinearOperator,
    OperatorParams, OperatorRegistry, PointState,
};
pub use problem::{Branch, ExactFn, ProblemSpec, ScalarFn, SourceFn, TraceFn, VectorFn};
