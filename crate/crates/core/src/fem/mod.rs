//! Lagrange finite elements for the magnetic Neumann Laplacian.

pub mod assembly;
pub mod eigen;
pub mod quadrature;
pub mod space;
pub mod sparse;

pub use assembly::{assemble, assemble_with, AssembledForms};
pub use eigen::{ground_state, rayleigh, EigenOptions, EigenResult};
pub use space::{ElementGeometry, ElementOrder, FeSpace};
