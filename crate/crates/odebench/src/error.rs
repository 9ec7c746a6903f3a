use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("unknown problem `{0}`")]
    UnknownProblem(String),
    #[error("unknown method `{0}`")]
    UnknownMethod(String),
    #[error("only {usable} usable rows for an order fit, need 3")]
    InsufficientRows { usable: usize },
    #[error("reference solutions disagree by {gap:e} (limit {limit:e})")]
    ReferenceDisagreement { gap: f64, limit: f64 },
    #[error("oracle check failed: {0}")]
    OracleMismatch(String),
    #[error(transparent)]
    Numerical(#[from] rok_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl BenchError {
    /// 1 for bad input, 2 for numerical failure, 3 when references disagree.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Usage(_)
            | BenchError::UnknownProblem(_)
            | BenchError::UnknownMethod(_)
            | BenchError::Io(_) => 1,
            BenchError::Numerical(rok_core::Error::InvalidArgument(_)) => 1,
            BenchError::Numerical(_) | BenchError::InsufficientRows { .. } => 2,
            BenchError::ReferenceDisagreement { .. } | BenchError::OracleMismatch(_) => 3,
        }
    }
}

pub type BenchResult<T> = std::result::Result<T, BenchError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(BenchError::Usage("x".into()).exit_code(), 1);
        assert_eq!(BenchError::UnknownMethod("x".into()).exit_code(), 1);
        assert_eq!(BenchError::Numerical(rok_core::Error::NonFiniteOutput("step")).exit_code(), 2);
        assert_eq!(BenchError::Numerical(rok_core::Error::StepSizeUnderflow { t: 0.0, h: 0.0 }).exit_code(), 2);
        assert_eq!(BenchError::ReferenceDisagreement { gap: 1.0, limit: 0.0 }.exit_code(), 3);
    }
}
