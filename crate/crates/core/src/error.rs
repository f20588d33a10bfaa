use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("index out of range: {0}")]
    Index(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal residual {residual:e})")]
    ConvergenceFailure { sweeps: usize, residual: f64 },

    #[error("spectral patch: {0}")]
    Patch(String),

    #[error("gap violation: distance {distance:e} from the patch interval to the outer spectrum is below gamma = {gamma:e}")]
    Gap { distance: f64, gamma: f64 },

    #[error("contour passes within {distance:e} of the spectrum (required margin {required:e})")]
    Contour { distance: f64, required: f64 },

    #[error("quadrature: {0}")]
    Quadrature(String),

    #[error("truncation: {0}")]
    Truncation(String),
}

impl Error {
    /// Stable machine-readable code, used in reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid_input",
            Error::Shape(_) => "shape",
            Error::Index(_) => "index",
            Error::Domain(_) => "domain",
            Error::ConvergenceFailure { .. } => "convergence_failure",
            Error::Patch(_) => "patch",
            Error::Gap { .. } => "gap",
            Error::Contour { .. } => "contour",
            Error::Quadrature(_) => "quadrature",
            Error::Truncation(_) => "truncation",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
