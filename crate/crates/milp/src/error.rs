use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MilpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite data in {0}")]
    NonFinite(String),
    #[error("column {col} has lower bound {lower} above upper bound {upper}")]
    Bounds { col: usize, lower: f64, upper: f64 },
}
