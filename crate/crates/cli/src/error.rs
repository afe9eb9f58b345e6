use semiclassic_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("schema error in field `{field}`: {message}")]
    Schema { field: String, message: String },

    #[error(transparent)]
    Domain(#[from] CoreError),

    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Schema { .. } => 2,
            CliError::Domain(e) => domain_exit_code(e),
            CliError::Io(_) => 6,
        }
    }

    /// Short machine-readable name used in report diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Parse { .. } => "ParseError",
            CliError::Schema { .. } => "SchemaError",
            CliError::Domain(e) => domain_kind(e),
            CliError::Io(_) => "IoError",
        }
    }
}

pub fn domain_exit_code(e: &CoreError) -> i32 {
    match e {
        CoreError::DegenerateFixedPoint(_)
        | CoreError::Parabolic(_)
        | CoreError::NonIsolated(_)
        | CoreError::CentralPoint(_) => 3,
        CoreError::Kernel(_) => 4,
        CoreError::Matching(_) | CoreError::OracleMismatch(_) => 5,
        _ => 2,
    }
}

pub fn domain_kind(e: &CoreError) -> &'static str {
    match e {
        CoreError::Dimension(_) => "DimensionError",
        CoreError::NotSymplectic { .. } => "NotSymplecticError",
        CoreError::DegenerateFixedPoint(_) => "DegenerateFixedPointError",
        CoreError::Parabolic(_) => "ParabolicError",
        CoreError::InvalidBlock(_) => "InvalidBlockError",
        CoreError::InvalidComplexStructure(_) => "InvalidComplexStructureError",
        CoreError::InvalidOperator(_) => "InvalidOperatorError",
        CoreError::Kernel(_) => "KernelError",
        CoreError::UnsupportedPath(_) => "UnsupportedPathError",
        CoreError::Matching(_) => "MatchingError",
        CoreError::Config(_) => "ConfigError",
        CoreError::Unsupported(_) => "UnsupportedError",
        CoreError::NonIsolated(_) => "NonIsolatedError",
        CoreError::CentralPoint(_) => "CentralPointError",
        CoreError::OracleMismatch(_) => "OracleMismatchError",
    }
}
