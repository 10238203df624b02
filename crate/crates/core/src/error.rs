use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Arguments outside the domain of the requested function.
    #[error("{0}")]
    Domain(String),

    /// A numerical routine failed to converge or produced a non-finite value.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Incompatible options (e.g. strategy not valid for a family).
    #[error("{0}")]
    Usage(String),

    #[error("collection too large: about {estimate} members exceeds the cap of {cap}; use the stepwise strategy or a directed degree family")]
    TooLarge { estimate: f64, cap: u64 },

    #[error("lasso did not converge after {sweeps} sweeps (last change {last_change:e})")]
    NoConvergence {
        sweeps: usize,
        last_change: f64,
        last_iterate: Vec<f64>,
    },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}
