use thiserror::Error;

/// Errors produced by game construction, analysis, and simulation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid game configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid strategy profile: {0}")]
    InvalidProfile(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("instance too large for exhaustive enumeration: {profiles} profiles exceeds cap {cap}")]
    EnumerationTooLarge { profiles: u128, cap: u64 },

    #[error("game has no pure Nash equilibrium: {0}")]
    NoPne(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
