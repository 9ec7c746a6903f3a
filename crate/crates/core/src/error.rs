use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is singular (pivot {pivot:e} at column {column})")]
    SingularMatrix { column: usize, pivot: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("system does not provide {0}")]
    MissingCapability(&'static str),

    #[error("non-finite value produced by {0}")]
    NonFiniteOutput(&'static str),

    #[error("initial Krylov vector is zero")]
    ZeroInitialVector,

    #[error("operation requires an autonomous Krylov basis")]
    NotAutonomous,

    #[error("reduced stage matrix (I - h*gamma*H) is singular")]
    SingularReducedSystem,

    #[error("stability function is singular at the requested point")]
    SingularAtZ,

    #[error("step size underflow at t = {t:e} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
