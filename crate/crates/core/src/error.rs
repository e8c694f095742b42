use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("site index {site} out of range for {n_sites} sites")]
    SiteIndex { site: usize, n_sites: usize },
    #[error("hermiticity violated: max deviation {deviation:e}")]
    Hermiticity { deviation: f64 },
    #[error("unitarity violated: max deviation {deviation:e}")]
    Unitarity { deviation: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("eigendecomposition did not converge")]
    Eigen,
    #[error("protocol drives frequency nonpositive at t = {t}")]
    NonpositiveFrequency { t: f64 },
    #[error("propagation unstable: trace drift {drift:e} at t = {t}")]
    PropagationUnstable { drift: f64, t: f64 },
    #[error("positivity violated: eigenvalue {eigenvalue:e}")]
    Positivity { eigenvalue: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
