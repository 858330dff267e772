use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension {0} is not supported (use 1 or 2)")]
    UnsupportedDimension(usize),
    #[error("level {m} exceeds the cap {cap} for dimension {dim}")]
    LevelCap { m: u32, dim: usize, cap: u32 },
    #[error("point {0:?} has dimension {1}, expected {2}")]
    DimensionMismatch(Vec<f64>, usize, usize),
    #[error("grid point {0:?} needs neighbor {1:?} outside the window")]
    OutsideWindow(Vec<i64>, Vec<i64>),
    #[error("operator failed: {0}")]
    Operator(String),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
