use std::fmt;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failure categories shared by every module.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("time grids do not match: {0}")]
    GridMismatch(String),

    #[error("path ensemble carries no index pairing")]
    MissingPairing,

    #[error("numeric overflow in {0}")]
    Overflow(&'static str),

    #[error("blow-up at t = {time}: {site} produced a non-finite value")]
    BlowUp { time: f64, site: BlowUpSite },

    #[error("unknown condition `{0}`")]
    UnknownCondition(String),

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Where a non-finite value first appeared.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlowUpSite {
    Particle(usize),
    Mode { field: usize, mode: usize },
    Ode,
}

impl fmt::Display for BlowUpSite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BlowUpSite::Particle(id) => write!(f, "particle {id}"),
            BlowUpSite::Mode { field, mode } => write!(f, "field {field} mode {mode}"),
            BlowUpSite::Ode => write!(f, "ode integrator"),
        }
    }
}

impl Error {
    pub(crate) fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        let line = err.position().map(|p| p.line() as usize).unwrap_or(0);
        match err.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            kind => Error::parse(line, format!("{kind:?}")),
        }
    }
}
