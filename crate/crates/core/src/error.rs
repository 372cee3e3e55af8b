use crate::tf::NormalizationState;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported representation: {0}")]
    UnsupportedRepresentation(String),

    #[error("no signal: {0}")]
    NoSignal(String),

    #[error("numeric failure{}: {detail}", position.map(|p| format!(" at position {p}")).unwrap_or_default())]
    NumericFailure {
        position: Option<usize>,
        detail: String,
    },

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("corrupt file: {0}")]
    CorruptFile(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("wrong normalization state: expected {expected:?}, found {found:?}")]
    WrongNormalizationState {
        expected: NormalizationState,
        found: NormalizationState,
    },

    #[error("degenerate statistics: {0}")]
    DegenerateStats(String),

    #[error("cannot split: {0}")]
    CannotSplit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn numeric(position: Option<usize>, detail: impl Into<String>) -> Self {
        Error::NumericFailure {
            position,
            detail: detail.into(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NumericFailure { .. } => 3,
            _ => 2,
        }
    }
}
