//! Error types shared across the crate.

use crate::ledger::IterationLedger;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Two interface fields that must share a length do not.
    #[error("interface length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    /// A NaN or infinity showed up where only finite values are allowed.
    #[error("non-finite value encountered in {context}")]
    NonFinite { context: String },

    /// A precondition on an argument was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Newton linear solve hit a pivot below the singularity threshold.
    #[error("jacobian singular or ill-conditioned (pivot ratio {ratio:.3e})")]
    SingularJacobian { ratio: f64 },

    /// Residual norm blew past the divergence guard.
    #[error("newton diverged: residual norm {norm:.3e}")]
    Diverged { norm: f64 },

    /// An unbounded Newton budget hit the per-call cap without converging.
    #[error("newton did not converge within {cap} iterations (residual {residual:.3e})")]
    NewtonStalled { cap: usize, residual: f64 },

    /// The coupling loop hit its iteration cap. Carries the ledger so the
    /// caller can inspect (and account for) the work done up to the stall.
    #[error("coupling did not converge within {max_iters} iterations at time step {step}")]
    CouplingDidNotConverge {
        step: usize,
        max_iters: usize,
        ledger: Box<IterationLedger>,
    },

    /// Configuration parse or validation failure.
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv parse error: {0}")]
    CsvParse(String),

    /// Heatmap emission requires a complete rectangular budget grid.
    #[error("incomplete budget grid: missing cells {missing:?}")]
    IncompleteGrid { missing: Vec<String> },
}

impl Error {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
