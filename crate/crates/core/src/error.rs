//! Crate-wide error type.

/// Errors from configuration, simulation, labeling, and persistence.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid or inconsistent configuration value.
    #[error("config: {0}")]
    Config(String),
    /// Operation called outside its physical domain (e.g. no contact).
    #[error("domain: {0}")]
    Domain(String),
    /// A trial cannot be labeled (no gross slip observed).
    #[error("labeling: {0}")]
    Labeling(String),
    /// Feature/model dimension mismatch.
    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },
    /// A required artifact file is missing.
    #[error("missing artifact: {0}")]
    MissingArtifact(String),
    /// An input file no longer matches its manifest checksum.
    #[error("stale input (checksum mismatch): {0}")]
    StaleInput(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("toml: {0}")]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
