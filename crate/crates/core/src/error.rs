use std::fmt;

use thiserror::Error;

/// Which lower bound on the sweep-trigger width was violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UthBound {
    /// Sweeping must not widen the uncertainty: `u_comm <= u_th`.
    Shrinkage,
    /// Every sweeping beam needs a nonnegative width: `omega_1 >= 0`.
    NonNegativeBeams,
}

impl fmt::Display for UthBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UthBound::Shrinkage => f.write_str("post-sweep width must not exceed u_th"),
            UthBound::NonNegativeBeams => f.write_str("first beamwidth must be nonnegative"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid system parameter `{field}`: {reason}")]
    InvalidParams { field: &'static str, reason: String },

    #[error("non-zero drift velocity ({0} m/s) is not supported; steer it out before sweeping")]
    DriftNotSupported(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("u_th = {u_th:e} m is below the minimum {min:e} m for eta = {eta} ({bound})")]
    UthTooSmall {
        eta: u32,
        u_th: f64,
        min: f64,
        bound: UthBound,
    },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("singular input: {0}")]
    Singular(String),

    #[error("internal solver error: {0}")]
    Solver(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
