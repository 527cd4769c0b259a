use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violates an operation's precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A request would exceed a configured resource budget.
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// Text input could not be parsed.
    #[error("cannot parse `{token}`: {reason}")]
    Parse { token: String, reason: String },

    /// An experiment configuration cannot be resolved.
    #[error("configuration error: {0}")]
    Config(String),

    /// Adaptive quadrature ran out of nodes before meeting its tolerance.
    #[error("quadrature did not converge with {nodes} nodes (last relative change {change:e})")]
    Quadrature { nodes: usize, change: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn parse(token: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Parse {
            token: token.into(),
            reason: reason.into(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) | Error::Json(_) | Error::Csv(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
