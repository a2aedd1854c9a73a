use thiserror::Error;

/// Errors raised by construction, numerics and file handling.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value at position {0}")]
    NonFinite(usize),

    #[error("state is not normalized: norm^2 = {norm_sq}")]
    Normalization { norm_sq: f64 },

    #[error("dimension order: expected d <= d', got d = {d}, d' = {dprime}")]
    DimensionOrder { d: usize, dprime: usize },

    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("coefficient matrix has a zero entry: {0}")]
    ZeroEntry(String),

    #[error("degenerate coefficients: {0}")]
    DegenerateCoefficients(String),

    #[error("k = {k} does not divide {rows} x {cols}; the cyclic construction does not apply")]
    NotMultiple { rows: usize, cols: usize, k: usize },

    #[error("k = {k} divides {rows} x {cols}; use the cyclic construction instead")]
    WrongPath { rows: usize, cols: usize, k: usize },

    #[error("unsupported by construction: {0}")]
    Unsupported(String),

    #[error("no tiling of the {rows} x {cols} corner into rank-{k} patterns was found")]
    TilingNotFound { rows: usize, cols: usize, k: usize },

    #[error("malformed file: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for requests that are well formed but outside what the
    /// constructions in this crate can produce.
    pub fn is_unsupported(&self) -> bool {
        matches!(self, Error::Unsupported(_) | Error::TilingNotFound { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
