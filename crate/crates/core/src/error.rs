use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or type invariant does not hold.
    #[error("invalid parameters: {0}")]
    Invalid(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// The phase of an exact-zero sample is undefined.
    #[error("phase undefined: exact-zero sample at pilot {index} of symbol {symbol}")]
    ZeroSample { symbol: usize, index: usize },

    #[error("undefined signal power")]
    ZeroPower,

    #[error("estimator undefined: {0}")]
    Undefined(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("trial failed (snr_db={snr_db}, n_p={n_p}, trial={trial}): {source}")]
    Trial {
        snr_db: f64,
        n_p: usize,
        trial: u64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    /// True when the root cause is a filesystem or stream failure.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io(_) => true,
            Error::Trial { source, .. } => source.is_io(),
            _ => false,
        }
    }
}
