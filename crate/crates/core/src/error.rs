use thiserror::Error;

/// Error type shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("split scheme constraint violated: {0}")]
    Scheme(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("unsupported tail rule: {0}")]
    UnsupportedTail(String),

    #[error("density is not certified non-negative; sampling refused")]
    NotCertified,

    #[error("rejection sampler acceptance rate below 1e-3 ({accepted} of {proposed} proposals)")]
    LowAcceptance { accepted: u64, proposed: u64 },

    #[error("grid error: {0}")]
    Grid(String),

    #[error("time-change construction violates {bound}: {detail}")]
    Construction { bound: String, detail: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("kernel indefinite beyond tolerance: min eigenvalue {min_eig}")]
    IndefiniteKernel { min_eig: f64 },

    #[error("config error at `{path}`: {msg}")]
    Config { path: String, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
