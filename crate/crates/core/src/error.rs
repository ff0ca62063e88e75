use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("node {node} has zero degree")]
    ZeroDegree { node: usize },

    #[error("eigensolver did not converge (residual norm {residual:e})")]
    EigenNonConvergence { residual: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("fairness infeasible for {count} node(s)")]
    Infeasible { count: usize },

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Infeasible { .. } => 3,
            Error::ZeroDegree { .. }
            | Error::EigenNonConvergence { .. }
            | Error::NotPositiveSemidefinite { .. }
            | Error::Numeric(_) => 4,
            _ => 2,
        }
    }
}
