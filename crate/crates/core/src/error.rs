use thiserror::Error;

/// Errors raised by the computational modules.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("matrix is not symplectic (defect {defect:.3e} > {tol:.1e})")]
    NotSymplectic { defect: f64, tol: f64 },

    #[error("degenerate fixed point: {0}")]
    DegenerateFixedPoint(String),

    #[error("parabolic (non-semisimple) element: {0}")]
    Parabolic(String),

    #[error("invalid Cartan block: {0}")]
    InvalidBlock(String),

    #[error("invalid complex structure: {0}")]
    InvalidComplexStructure(String),

    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    #[error("operator has kernel: {0}")]
    Kernel(String),

    #[error("unsupported path: {0}")]
    UnsupportedPath(String),

    #[error("eigenvalue matching failed: {0}")]
    Matching(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("fixed points are not isolated: {0}")]
    NonIsolated(String),

    #[error("central point: {0}")]
    CentralPoint(String),

    #[error("internal consistency check failed: {0}")]
    OracleMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
