use thiserror::Error;

/// Errors raised by problem construction, the solvers and the verification layer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum BeamError {
    /// Input data violates a structural rule (ordering, ranges, missing blocks).
    #[error("invalid input: {0}")]
    Validation(String),

    /// A numeric argument lies outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A basis or crack index that does not exist for the problem.
    #[error("index {index} out of range for {count} cracks")]
    IndexOutOfRange { index: usize, count: usize },

    /// The scan found fewer roots than requested below the scan ceiling.
    #[error("found {found} of {requested} roots below lambda_max = {lambda_max}")]
    RootShortfall {
        found: usize,
        requested: usize,
        lambda_max: f64,
    },

    /// The system matrix at a located root does not have a one-dimensional nullspace.
    #[error("nullspace of dimension {dimension} at lambda = {lambda}")]
    Degenerate { lambda: f64, dimension: usize },
}

pub type Result<T> = std::result::Result<T, BeamError>;
