use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("basis activation sum {sum:e} at phase {phase} is below the guard threshold")]
    DegeneratePhase { phase: f64, sum: f64 },

    #[error("degenerate demonstration: start and goal coincide in every dimension")]
    DegenerateDemonstration,

    #[error("rollout diverged at step {step}")]
    Unstable { step: usize },

    #[error(
        "retained prefix has {len} samples but blending needs at least 3; \
         the corrective cut lies too close to the start of the deficient trajectory"
    )]
    PrefixTooShort { len: usize },

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("{}: line {line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Coarse grouping of errors used by the front ends to pick exit codes and
/// HTTP statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Malformed input data or violated preconditions.
    Data,
    /// Numerical failure during fitting, integration or solving.
    Numeric,
    Io,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidArgument(_)
            | Error::TooFewSamples { .. }
            | Error::DegenerateDemonstration
            | Error::PrefixTooShort { .. }
            | Error::Parse { .. }
            | Error::Schema(_) => ErrorClass::Data,
            Error::DegeneratePhase { .. } | Error::Unstable { .. } | Error::Solver(_) => {
                ErrorClass::Numeric
            }
            Error::Io(_) => ErrorClass::Io,
        }
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid_argument",
            Error::TooFewSamples { .. } => "too_few_samples",
            Error::DegeneratePhase { .. } => "degenerate_phase",
            Error::DegenerateDemonstration => "degenerate_demonstration",
            Error::Unstable { .. } => "unstable",
            Error::PrefixTooShort { .. } => "prefix_too_short",
            Error::Solver(_) => "solver",
            Error::Parse { .. } => "parse",
            Error::Schema(_) => "schema",
            Error::Io(_) => "io",
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
