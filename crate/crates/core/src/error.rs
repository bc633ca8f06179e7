use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown axis `{0}`")]
    UnknownAxis(String),
    #[error("duplicate axis `{0}`")]
    DuplicateAxis(String),
    #[error("invalid axis `{name}`: {reason}")]
    InvalidAxis { name: String, reason: String },
    #[error("invalid pmf: {0}")]
    InvalidPmf(String),
    #[error("groups overlap on axis `{0}`")]
    OverlappingGroups(String),
    #[error("axis mismatch: {0}")]
    AxisMismatch(String),
    #[error("value {value} is not a point of axis `{axis}`")]
    GridMismatch { axis: String, value: f64 },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },
    #[error("quadrature did not converge on [{a}, {b}]")]
    Quadrature { a: f64, b: f64 },
    #[error("no probability mass inside the clip window")]
    EmptyWindow,
    #[error("Markov condition violated: {0}")]
    MarkovViolation(String),
    #[error("missing role `{0}`")]
    MissingRole(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("system is unbounded in the optimized direction")]
    Unbounded,
    #[error("system is infeasible")]
    Infeasible,
    #[error("too large: {0}")]
    TooLarge(String),
    #[error("singular covariance: {0}")]
    Singular(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name: name.to_string(),
        reason: reason.into(),
    }
}
