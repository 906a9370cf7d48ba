use thiserror::Error;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its physical domain (negative time constant,
    /// overlap > 1, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Inputs are individually valid but jointly degenerate (zero
    /// normalization, zero rates, ...).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A caller contract was violated (unsorted stream, mismatched binning).
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Configuration is inconsistent (bin misalignment, overlap/v0 mismatch).
    #[error("config error: {0}")]
    Config(String),

    /// Input data the caller handed us is structurally broken (bad magic,
    /// truncated file, out-of-order records).
    #[error("malformed data: {0}")]
    Malformed(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
    pub fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }
    pub fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
    pub fn malformed(msg: impl Into<String>) -> Self {
        Error::Malformed(msg.into())
    }
}
