//! Finite-element building blocks: reference elements, quadrature, DOF
//! numbering, sparse storage, and field evaluation.

pub mod dofmap;
pub mod element;
pub mod field;
pub mod quadrature;
pub mod sparse;

pub use dofmap::DofMap;
pub use element::{ElementKind, ReferenceElement, ShapeEval, Tabulation};
pub use field::{error_norms, eval_at, eval_point, nodal_interpolate, CellGeometry, FieldSample};
pub use quadrature::{gauss_rule, QuadratureRule};
pub use sparse::CsrMatrix;
