use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A direction was requested from a vector with no direction (zero norm).
    #[error("degenerate direction: {0}")]
    DegenerateDirection(String),

    #[error("invalid quantum state: {0}")]
    InvalidState(String),

    /// The points of a cluster sum to the zero vector, so no spherical centroid exists.
    #[error("degenerate cluster {cluster}: member points sum to the zero vector")]
    DegenerateCluster { cluster: usize },

    #[error("point {index}: {source}")]
    AtPoint {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("centroids {first} and {second} both demap to alphabet symbol {symbol}")]
    AmbiguousDemap {
        symbol: usize,
        first: usize,
        second: usize,
    },

    #[error("noise power is zero, SNR is infinite")]
    InfiniteSnr,

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("experiment cell {cell}: {source}")]
    InCell {
        cell: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Strips location wrappers (`AtPoint`, `InCell`) and returns the underlying error.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtPoint { source, .. } | Error::InCell { source, .. } => source.root(),
            other => other,
        }
    }
}
