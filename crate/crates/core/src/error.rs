use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Adaptive quadrature ran out of subdivisions before meeting its tolerance.
    #[error("quadrature did not converge: best estimate {estimate:e} with error {error:e}")]
    Accuracy { estimate: f64, error: f64 },

    /// A tabulated object was queried outside the range it was sampled on.
    #[error("range error: {0}")]
    Range(String),

    /// A quantity that must be positive semidefinite is not.
    #[error("positivity error: {0}")]
    Positivity(String),

    /// The requested combination of inputs is not supported.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// An object could not be constructed because its parts are inconsistent.
    #[error("construction error: {0}")]
    Construction(String),

    /// A time step exceeds the stability bound of the integrator.
    #[error("step-size error: {0}")]
    StepSize(String),

    /// The trade-off is violated, so no completely positive unraveling exists.
    #[error("refused: {0}")]
    Refused(String),

    /// Malformed text input (model files, tabulated kernels).
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
