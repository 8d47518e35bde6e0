use thiserror::Error;

use crate::model::{DetectorKind, Outcome};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A quantity conditioned on an event of zero probability (no herald is
    /// ever possible) was requested.
    #[error("undefined conditional: {0} has zero probability")]
    UndefinedConditional(&'static str),

    #[error("outcome {outcome:?} is not reported by a {kind:?} detector")]
    OutcomeMismatch {
        kind: DetectorKind,
        outcome: Outcome,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::invalid(name, format!("{value} is not in [0, 1]")))
    }
}

pub(crate) fn check_mean_photon_number(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(Error::invalid(
            name,
            format!("{value} is not a finite value >= 0"),
        ))
    }
}
