use thiserror::Error;

/// Errors raised by the solver toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix shape mismatch: {0}")]
    Shape(String),
    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is rank deficient (column {column})")]
    RankDeficient { column: usize },
    #[error("matrix is not orthogonal (gram residual {residual:.3e})")]
    NotOrthogonal { residual: f64 },
    #[error("polynomial is identically zero")]
    DegeneratePolynomial,
    #[error("no feasible planar update exists for this block")]
    InfeasibleSubproblem,
    #[error("harmonic model is empty")]
    EmptyModel,
    #[error("function is not a trigonometric polynomial of degree {degree} (residual {residual:.3e})")]
    NotTrigPolynomial { degree: usize, residual: f64 },
    #[error("need at least two rows to form a working set, got {0}")]
    TooFewRows(usize),
    #[error("matrix is not symmetric (max asymmetry {0:.3e})")]
    NotSymmetric(f64),
    #[error("matrix is not positive semidefinite (eigenvalue {0:.3e})")]
    NotPsd(f64),
    #[error("malformed CSV at row {row}: {reason}")]
    MalformedCsv { row: usize, reason: String },
    #[error("infeasible starting point: {0}")]
    InfeasibleStart(String),
    #[error("gradient check failed: analytic {analytic:.6e} vs finite difference {numeric:.6e}")]
    GradientMismatch { analytic: f64, numeric: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
