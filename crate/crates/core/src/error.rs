use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("infeasible variance: v = {variance} must be below m(1-m) = {bound}")]
    InfeasibleVariance { variance: f64, bound: f64 },

    #[error("degenerate denominator in the three-moment solution ({0})")]
    DegenerateDenominator(f64),

    #[error("density is undefined at ({x}, {y}) for this parameter")]
    UndefinedDensity { x: f64, y: f64 },

    #[error("quadrature failed to reach tolerance (estimated error {error:e})")]
    QuadratureFailure { error: f64 },

    #[error("sample variance is zero; correlation undefined")]
    ZeroVariance,

    #[error("optimizer failed: {0}")]
    OptimizerFailure(String),

    #[error("chain {chain} failed to initialize: {reason}")]
    ChainFailure { chain: usize, reason: String },

    #[error("delta-method variance estimate is zero")]
    DegenerateVariance,

    #[error("covariance matrix is not positive definite")]
    CholeskyFailure,

    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("I/O error: {0}")]
    Io(String),

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },
}

impl Error {
    /// Short machine-readable tag, used by the CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::InfeasibleVariance { .. } => "InfeasibleVariance",
            Error::DegenerateDenominator(_) => "DegenerateDenominator",
            Error::UndefinedDensity { .. } => "UndefinedDensity",
            Error::QuadratureFailure { .. } => "QuadratureFailure",
            Error::ZeroVariance => "ZeroVariance",
            Error::OptimizerFailure(_) => "OptimizerFailure",
            Error::ChainFailure { .. } => "ChainFailure",
            Error::DegenerateVariance => "DegenerateVariance",
            Error::CholeskyFailure => "CholeskyFailure",
            Error::InvalidSample(_) => "InvalidSample",
            Error::Io(_) => "Io",
            Error::Parse { .. } => "Parse",
        }
    }

    /// True for I/O and input-format problems (as opposed to numerical-domain errors).
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Io(_) | Error::Parse { .. } | Error::InvalidSample(_))
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
