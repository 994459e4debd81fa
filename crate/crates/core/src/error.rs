//! Error type shared by every module of the crate.

use std::path::PathBuf;

/// Failures reported by the numerical routines and the serializers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument violates a documented precondition.
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    /// The adaptive integrator could not keep the step above its floor.
    #[error("step size underflow at t = {t:e} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    /// The adaptive integrator exhausted its step budget.
    #[error("step budget of {max_steps} exhausted at t = {t:e}")]
    StepBudget { t: f64, max_steps: usize },

    /// A non-finite value appeared in a state or result.
    #[error("non-finite value encountered at t = {t:e}")]
    NonFinite { t: f64 },

    /// Adaptive quadrature could not reach the requested tolerance.
    #[error("quadrature on [{a:e}, {b:e}] stopped with error estimate {error:e}")]
    Quadrature { a: f64, b: f64, error: f64 },

    /// A least-squares extraction left a residual above its bound.
    #[error("fit residual {residual:e} exceeds bound {bound:e}")]
    FitResidual { residual: f64, bound: f64 },

    /// Integer arithmetic overflowed; `depth` is the last complete level.
    #[error("integer overflow after {depth} complete levels")]
    Overflow { depth: usize },

    /// An explicit scheme was configured outside its stability budget.
    #[error("time step {dt:e} exceeds stability bound {bound:e}")]
    Stability { dt: f64, bound: f64 },

    /// Reading or writing an artifact failed.
    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Serialization of an artifact failed.
    #[error("serialization failure on {path}: {message}")]
    Serialize { path: PathBuf, message: String },
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidArgument {
        name,
        reason: reason.into(),
    }
}
