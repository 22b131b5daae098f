use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("numeric failure in {routine}: {detail}")]
    Numeric {
        routine: &'static str,
        detail: String,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("search space too large: {combinations:.3e} combinations exceeds guard {guard:.0e}")]
    Guard { combinations: f64, guard: f64 },

    #[error("storage left [0, {capacity}] at slot {slot}: level {level}")]
    Storage {
        slot: u64,
        level: f64,
        capacity: f64,
        trace: Vec<String>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("internal invariant broken: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numeric(routine: &'static str, detail: impl Into<String>) -> Self {
        Error::Numeric {
            routine,
            detail: detail.into(),
        }
    }

    /// Short machine-readable tag for error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Precondition(_) => "precondition",
            Error::Numeric { .. } => "numeric",
            Error::Unsupported(_) => "unsupported",
            Error::Guard { .. } => "guard",
            Error::Storage { .. } => "storage",
            Error::Config(_) => "config",
            Error::Internal(_) => "internal",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
