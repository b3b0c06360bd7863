//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("region contains no pixels")]
    EmptyRegion,
    #[error("no superpixel passed foreground selection")]
    EmptyModel,
    #[error("no valid matches to vote with")]
    NoMatches,
    #[error("invalid frame: {0}")]
    InvalidFrame(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("sequence error: {0}")]
    Sequence(String),
    #[error("scenario error: {0}")]
    Scenario(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Image(#[from] image::ImageError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Configuration rejection naming the offending field and its bound.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("config field `{field}`: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: &str, message: impl Into<String>) -> Self {
        ConfigError {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
