//! Reference elements, quadrature, dof maps, spaces, assembly and norms.

pub mod assembly;
pub mod basis;
pub mod dofmap;
pub mod field;
pub mod quadrature;
pub mod space;

pub use assembly::{assemble, assemble_vector, load_kernel, mass_kernel, stiffness_kernel};
pub use basis::{eval_basis, Basis, BasisEval};
pub use dofmap::{BoundaryFlags, DofKind, DofMap};
pub use field::{error_norm, error_norm_weighted, FieldFunction, Hessian, Jet2, Norm};
pub use quadrature::{make_quadrature, Cell, Quadrature};
pub use space::{ElementValues, FeSpace, Space1D, Space2D};
