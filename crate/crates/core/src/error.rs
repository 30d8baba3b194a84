use thiserror::Error;

pub type Result<T> = std::result::Result<T, HlocError>;

#[derive(Debug, Error)]
pub enum HlocError {
    #[error("invalid box size {tau} for window of length {len}")]
    InvalidScale { tau: usize, len: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    /// Every detrended variance in the fit range vanished, so no slope exists.
    #[error("degenerate window: fluctuation function vanishes")]
    DegenerateWindow,

    #[error("insufficient scales: {found} in range, at least {required} required")]
    InsufficientScales { found: usize, required: usize },

    #[error("insufficient data: {needed} points needed, {available} available")]
    InsufficientData { needed: usize, available: usize },

    #[error("insufficient history at session {session}: {reason}")]
    InsufficientHistory { session: usize, reason: String },

    #[error("degenerate regression: {0}")]
    DegenerateRegression(String),

    #[error("trend line never reaches the target level (slope {slope})")]
    NoCrossing { slope: f64 },

    #[error("generation failed: {0}")]
    Generation(String),

    #[error("invalid drop profile: {0}")]
    InvalidProfile(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("validation error at line {line}: {message}")]
    Validation { line: u64, message: String },

    #[error("empty input")]
    EmptyInput,

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
