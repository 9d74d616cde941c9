use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("interval order violated: {0} does not hold")]
    IntervalOrderViolation(String),

    #[error("damping profile {profile} has negative amplitude {value}")]
    NegativeDamping { profile: &'static str, value: f64 },

    #[error("damping profile {profile} must have a positive amplitude in case {case}")]
    ZeroDamping { profile: &'static str, case: &'static str },

    #[error("coupling amplitude c0 must be nonzero")]
    ZeroCoupling,

    #[error("point {x} lies outside the domain [0, {length}]")]
    OutOfDomain { x: f64, length: f64 },

    #[error("SSC check inapplicable: {0}")]
    SscInapplicable(String),

    #[error("grid too coarse: support of profile {profile} contains no cell midpoint")]
    ResolutionTooCoarse { profile: &'static str },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("singular linear system (zero pivot at row {row})")]
    SingularSystem { row: usize },

    #[error("state became non-finite at step {step}")]
    NonFiniteState { step: usize },

    #[error("fit window too short: {0}")]
    WindowTooShort(String),

    #[error("non-positive energy {energy} at t = {t}")]
    NonPositiveEnergy { t: f64, energy: f64 },

    #[error("bad parameters: {0}")]
    BadParameters(String),

    #[error("n = {n} exceeds the dense limit {limit}; use the resolvent sweep instead")]
    TooLargeForDense { n: usize, limit: usize },

    #[error("iλI - A is numerically singular at λ = {lambda}")]
    NumericallySingular { lambda: f64 },

    #[error("empty frequency grid")]
    EmptyGrid,

    #[error("insufficient span for exponent fit: {0}")]
    InsufficientSpan(String),

    #[error("eigenvalue computation failed to converge")]
    EigenFailure,

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid configuration: {0}")]
    Validation(#[source] Box<Error>),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
