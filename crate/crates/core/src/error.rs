use thiserror::Error;

/// Error type shared by every computation in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// The boundary description does not define a valid star-shaped domain.
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    /// Mesh generation produced a tangled or non-conforming triangulation.
    #[error("meshing failed in {region}: {reason}")]
    Meshing { region: String, reason: String },

    /// A numerical kernel failed (factorization, iteration limit, NaN).
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// An eigen-iteration did not reach its tolerance.
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    /// A documented precondition of an operation was violated.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The operation is not meaningful for this input (e.g. localization near Π on a disc).
    #[error("not applicable: {0}")]
    NotApplicable(String),

    /// Inputs do not belong together (vector length vs mesh, unnormalized state, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// The spectral threshold crossing is not unique on the scanned window.
    #[error("non-unique crossing: lower field {underline:.6}, upper field {overline:.6}")]
    NonUnique { underline: f64, overline: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Coarse category used by front-ends to choose an exit status.
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Numeric(_) | Error::NoConvergence { .. } | Error::Meshing { .. } => ErrorCategory::Numeric,
            Error::Precondition(_) | Error::NotApplicable(_) | Error::Contract(_) | Error::NonUnique { .. } | Error::InvalidDomain(_) => {
                ErrorCategory::Precondition
            }
            Error::Io(_) | Error::Json(_) | Error::Csv(_) => ErrorCategory::Input,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Input,
    Numeric,
    Precondition,
}
