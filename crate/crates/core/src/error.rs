use thiserror::Error;

/// Errors raised by the numerical core.
///
/// The variants are coarse on purpose: front ends map them onto exit
/// codes (domain/dimension/constraint = usage, resource = cap exceeded).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("infeasible constraint: {0}")]
    Constraint(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_eta(eta: f64) -> Result<()> {
    if eta.is_finite() && eta > 0.0 && eta <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("eta = {eta} outside the valid domain (0, 1]")))
    }
}
