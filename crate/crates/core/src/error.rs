use std::path::PathBuf;

use thiserror::Error;

/// Every failure the library can report.
///
/// The CLI maps variants onto exit codes (configuration 2, solver 3, I/O 4).
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("config parse error at line {line} (key `{key}`): {message}")]
    Parse {
        line: usize,
        key: String,
        message: String,
    },

    #[error("meshing error: {0}")]
    Meshing(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("conflicting Dirichlet constraints on dof {dof}: {first} vs {second}")]
    ConstraintConflict { dof: usize, first: f64, second: f64 },

    #[error("linear solver failure: {0}")]
    LinearSolver(String),

    #[error("Newton iteration diverged at iterate {iteration}: {message}")]
    Divergence { iteration: usize, message: String },

    #[error("continuation stage {stage} (m = {m:e}, n = {n:e}) failed: {message}")]
    StageFailure {
        stage: usize,
        m: f64,
        n: f64,
        message: String,
        /// Last converged stage, kept for diagnostics.
        last_converged: Option<Box<crate::solver::Solution>>,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures that originate in the nonlinear or linear solvers.
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Error::Numeric(_)
                | Error::LinearSolver(_)
                | Error::Divergence { .. }
                | Error::StageFailure { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
