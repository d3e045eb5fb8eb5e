use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("polynomial of degree {0} has no roots to find")]
    DegenerateDegree(usize),
    #[error("series did not reach tolerance {tol:e} within {cap} coefficients")]
    SeriesNotConverged { tol: f64, cap: usize },
    #[error("requested {requested} eigenvalues but the grid only has {available} interior points")]
    TooManyEigenvalues { requested: usize, available: usize },
    #[error("eigen-iteration failed to converge: {0}")]
    NoConvergence(String),
    #[error("cannot normalize: {0}")]
    Normalization(String),
}

pub type Result<T> = std::result::Result<T, Error>;
