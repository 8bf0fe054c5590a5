use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("special function argument out of range: {0}")]
    SpecFun(String),

    #[error("matrix is numerically singular (pivot {pivot:.3e} at index {index})")]
    Singular { index: usize, pivot: f64 },

    #[error("linear solve residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    ResidualTooLarge { residual: f64, tolerance: f64 },

    #[error("point ({x}, {y}) lies outside the computational annulus")]
    PointOutsideDomain { x: f64, y: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
