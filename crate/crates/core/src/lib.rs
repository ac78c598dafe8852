//! Finite-element simulation of a viscous fluid flowing through a deformable
//! porous solid whose strain depends nonlinearly on stress.
//!
//! The discretization uses Q2 displacement and Taylor–Hood Q2/Q1
//! velocity/pressure on uniform quadrilateral meshes, with a first-order
//! semi-implicit time integrator that freezes the constitutive coefficients
//! at the previous step.

pub mod cli;
pub mod constitutive;
pub mod error;
pub mod experiments;
pub mod fem;
pub mod io;
pub mod manufactured;
pub mod mesh;
pub mod solver;

pub use error::{Error, Result};
