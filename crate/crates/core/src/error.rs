use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid arguments or violated preconditions.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    /// An iterative method stopped before reaching the requested tolerance,
    /// or a direct solve failed its a posteriori residual check.
    #[error("{method} did not converge: relative residual {residual:.3e} after {iterations} iterations")]
    NotConverged {
        method: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid coefficient file: {0}")]
    Format(String),

    /// A failure inside one solve of a sweep.
    #[error("{method} solve at h = 1/{n}: {source}")]
    Solve {
        method: &'static str,
        n: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// The innermost error, looking through [`Error::Solve`] wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Solve { source, .. } => source.root(),
            other => other,
        }
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}
