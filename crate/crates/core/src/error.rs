use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the construction, the spectral toolkit, or the solver.
///
/// Variants are grouped so the command-line layer can map them onto exit codes:
/// configuration problems, violated hard identities, and runtime/numerical failures.
#[derive(Debug, Error)]
pub enum Error {
    /// An input lies outside the domain of an operation (e.g. the Nash ball).
    #[error("domain error: {0}")]
    Domain(String),

    /// A numeric argument is outside its admissible range.
    #[error("range error: {0}")]
    Range(String),

    /// A field or argument fails a stated precondition (e.g. nonzero mean).
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// Parameters violate one of the construction inequalities.
    #[error("configuration error: {0}")]
    Config(String),

    /// The grid cannot represent the requested frequencies.
    #[error("resolution error: {0}")]
    Resolution(String),

    /// The coefficient induction hit a vanishing potential.
    #[error(
        "degenerate induction at k = {k}: sup norm of the modified symmetric gradient is zero"
    )]
    DegenerateInduction { k: usize },

    /// The Nash argument left the ball B(Id, 1/7) at some grid point.
    #[error(
        "decomposition domain error at k = {k}: |X - Id|_max = {norm:.6e} > 1/7 at grid index {index:?}; try a larger A"
    )]
    DecompositionDomain {
        k: usize,
        norm: f64,
        index: [usize; 3],
    },

    /// The Mikado L2 normalization has no plateau fraction in (0, 1).
    #[error("infeasible profile normalization: {0}")]
    InfeasibleNormalization(String),

    /// Non-finite values or runaway growth in the time integration.
    #[error("blow-up detected at t = {time:.6e}: {reason}")]
    BlowUp { time: f64, reason: String },

    /// A hard identity check failed.
    #[error("hard assertion failed: {0}")]
    Assertion(String),

    /// Malformed binary snapshot or document.
    #[error("format error: {0}")]
    Format(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Format(_) | Error::Resolution(_) => 2,
            Error::Assertion(_) => 3,
            _ => 4,
        }
    }
}
