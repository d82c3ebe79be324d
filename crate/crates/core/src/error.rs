use std::collections::BTreeMap;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed arguments: shape mismatches, unknown catalog names, bad parameters.
    #[error("input error: {0}")]
    Input(String),

    /// A precondition of the operation does not hold for this instance.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// An algebraic structure the operation relies on is violated beyond tolerance.
    #[error("structural error: {what} (residual {residual:.3e})")]
    Structural { what: String, residual: f64 },

    /// Nomizu construction produced identities with residuals beyond the construction threshold.
    #[error("construction error: {}", format_residuals(.residuals))]
    Construction { residuals: BTreeMap<String, f64> },
}

fn format_residuals(r: &BTreeMap<String, f64>) -> String {
    r.iter()
        .map(|(k, v)| format!("{k}={v:.3e}"))
        .collect::<Vec<_>>()
        .join(", ")
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}
