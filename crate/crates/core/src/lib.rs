//! Lowest eigenvalue of the magnetic Neumann Laplacian `(−i∇ + BA)²` on smooth
//! planar domains, its field derivative, boundary localization, and the
//! surface-superconductivity critical field derived from it.

// `!(x > 0.0)` is deliberate throughout: it also rejects NaN. Index loops
// mirror the matrix formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod degennes;
pub mod disc;
pub mod error;
pub mod fem;
pub mod gauge;
pub mod geometry;
pub mod spectral;
pub mod supercond;
pub mod tridiag;

pub use error::{Error, ErrorCategory, Result};

/// Complex scalar used for states and Hermitian matrices.
pub type C64 = num_complex::Complex64;

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
