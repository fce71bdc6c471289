use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("region operator has eigenvalue {0:e} below the clamping threshold")]
    NegativeEigenvalue(f64),
    #[error("operator lacks a 4-dimensional key register")]
    MissingKeyRegister,
    #[error("adaptive quadrature failed (estimate {estimate:e}, error {error:e})")]
    Quadrature { estimate: f64, error: f64 },
    #[error("SDP is infeasible: {0}")]
    Infeasible(String),
    #[error("honest statistics are inconsistent with the constraint operators: {0}")]
    InfeasibleStatistics(String),
    #[error("SDP solver did not converge after {iterations} iterations (residual {residual:e}, gap {gap:e})")]
    NotConverged { iterations: usize, residual: f64, gap: f64 },
    #[error("SDP solver numerical failure: {0}")]
    Numerical(String),
    #[error("input state is not positive semidefinite (λ_min = {0:e})")]
    NonPsdInput(f64),
    #[error("reduced image is singular (λ_min = {0:e})")]
    SingularInput(f64),
    #[error("facial reduction found an empty support")]
    DegenerateSupport,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
