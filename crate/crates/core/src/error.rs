use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} = {value} is outside [0, 1]")]
    Domain { name: &'static str, value: f64 },

    #[error("invalid degree profile: {0}")]
    InvalidDegrees(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no solution: {0}")]
    NoSolution(String),

    /// `x1` does not parameterize a fixed point because `x2[x1]` leaves `[0, 1]`.
    #[error("x1 = {x1} is excluded from the fixed-point set (x2[x1] = {x2})")]
    ExcludedPoint { x1: f64, x2: f64 },

    #[error("invalid channel table at cell (row {row}, col {col}): {reason}")]
    InvalidTable {
        row: usize,
        col: usize,
        reason: String,
    },

    #[error("channel config: {0}")]
    Config(String),
}

pub(crate) fn check_unit(name: &'static str, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::Domain { name, value })
    }
}
