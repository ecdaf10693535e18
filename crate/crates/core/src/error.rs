use thiserror::Error;

/// Errors raised by the models, the master-equation engine and the experiment drivers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A physical argument lies outside the region where the model is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// Inconsistent or unusable configuration (incommensurate tones, bad grid, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// The adaptive integrator could not make progress.
    #[error("integration failed at t = {t:.6e} s: {reason}")]
    Integration { t: f64, reason: String },

    /// A density-matrix invariant was violated beyond tolerance.
    #[error("integrity violation at t = {t:.6e} s: {what}")]
    Integrity { t: f64, what: String },
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// True for failures of the numerical engine rather than of its inputs.
    pub fn is_engine_failure(&self) -> bool {
        matches!(self, Error::Integration { .. } | Error::Integrity { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
