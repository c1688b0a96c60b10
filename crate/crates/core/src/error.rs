use thiserror::Error;

#[derive(Debug, Error)]
pub enum EulerError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("index {j} is not on the level-{n} mesh")]
    Index { j: usize, n: usize },

    #[error("middle-state root find did not converge after {iterations} iterations (bracket [{lo}, {hi}])")]
    NoConvergence { iterations: usize, lo: f64, hi: f64 },

    #[error("internal consistency violated: {0}")]
    Consistency(String),

    #[error("numerical abort at step {step}: {reason}")]
    NumericalAbort { step: usize, reason: String },

    #[error("velocity reconstruction failed at index {j} (discriminant {disc})")]
    Reconstruction { j: usize, disc: f64 },

    #[error("fixed-point iteration diverged after {} iterates", history.len())]
    Divergence { history: Vec<f64> },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, EulerError>;
