use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("motion rejected: {0}")]
    MotionRejected(String),

    #[error("insufficient data: need at least {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("protocol error at byte {offset}: {message}")]
    Protocol { offset: usize, message: String },

    #[error("state conflict for episode {episode_id}: {message}")]
    StateConflict { episode_id: u64, message: String },

    #[error("size error: {0}")]
    Size(String),

    #[error("data integrity error: {0}")]
    DataIntegrity(String),

    #[error("stage {stage} aborted after {attempts} attempts ({successes} successes)")]
    StageAbort {
        stage: String,
        attempts: usize,
        successes: usize,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation error in field `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("unsupported schema version {found} at line {line} (expected {expected})")]
    SchemaVersion {
        line: usize,
        found: u32,
        expected: u32,
    },

    #[error("efficiency undefined: run has zero successes")]
    UndefinedEfficiency,

    #[error("transport failure: {0}")]
    Transport(String),

    #[error("replay mismatch: {0}")]
    ReplayMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable machine-readable name for the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Precondition(_) => "precondition",
            Error::MotionRejected(_) => "motion_rejected",
            Error::InsufficientData { .. } => "insufficient_data",
            Error::Input(_) => "input",
            Error::Protocol { .. } => "protocol",
            Error::StateConflict { .. } => "state_conflict",
            Error::Size(_) => "size",
            Error::DataIntegrity(_) => "data_integrity",
            Error::StageAbort { .. } => "stage_abort",
            Error::Parse { .. } => "parse",
            Error::Validation { .. } => "validation",
            Error::SchemaVersion { .. } => "schema_version",
            Error::UndefinedEfficiency => "undefined_efficiency",
            Error::Transport(_) => "transport",
            Error::ReplayMismatch(_) => "replay_mismatch",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }

    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }
}
