//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A configuration value is outside its documented range.
    #[error("invalid configuration: {field}: {reason}")]
    Config { field: String, reason: String },

    /// An operation argument violates a precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Same-block swap not covered by the hedge budget (Alg. 1 revert).
    #[error("price is not attested: hedge budget {available} < required {required}")]
    PriceNotAttested { available: f64, required: f64 },

    /// Hedger withdrawal exceeding the attestation budget.
    #[error("insufficient hedge budget for withdrawal")]
    InsufficientHedgeBudget,

    /// Hook called out of order (after-swap without before-swap or
    /// a second before-swap while one is mid-flight).
    #[error("hook protocol misuse: {0}")]
    HookMisuse(&'static str),

    /// A non-finite value surfaced during an experiment.
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

impl Error {
    pub fn config(field: &str, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.to_string(),
            reason: reason.into(),
        }
    }

    pub fn argument(reason: impl Into<String>) -> Self {
        Error::Argument(reason.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
