//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point ({x}, {y}) lies outside the unit square")]
    OutsideSquare { x: f64, y: f64 },

    #[error("nodes {i} and {j} occupy the same position")]
    CoincidentNodes { i: usize, j: usize },

    #[error("self link requested for node {0}")]
    SelfLink(usize),

    #[error("cells ({0}, {1}) and ({2}, {3}) are not in the same sub-lattice")]
    SublatticeMismatch(u32, u32, u32, u32),

    #[error("d = {d} is within the excluded band around 1/2 (|d - 1/2| must be >= {guard})")]
    RegimeBoundary { d: f64, guard: f64 },

    #[error("no eligible relay in cell ({0}, {1})")]
    NoEligibleRelay(u32, u32),

    #[error("no cluster head in cell ({0}, {1})")]
    NoHeadInCell(u32, u32),

    #[error("thermal noise must be positive for the noise-limited upper bound")]
    NoiselessUpperBound,
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
