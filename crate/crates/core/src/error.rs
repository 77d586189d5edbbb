use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty pattern: the count is deterministic and its statistics are undefined")]
    EmptyPattern,

    #[error("invalid pattern: {0}")]
    InvalidPattern(String),

    #[error("pattern parse error on line {line}: {msg}")]
    PatternParse { line: usize, msg: String },

    #[error("invalid probability: {0}")]
    InvalidProbability(String),

    #[error("no probability declared for edge size {0}")]
    MissingSize(usize),

    #[error("schedule parse error: {0}")]
    ScheduleParse(String),

    #[error("{what} needs {needed} but the guard allows {limit}; use the pmf oracle on tiny instances or the surrogates")]
    Guard {
        what: &'static str,
        needed: u128,
        limit: u128,
    },

    #[error("degenerate count: standard deviation must be positive (got {0})")]
    DegenerateCount(f64),

    #[error("excess kurtosis needs positive variance")]
    ZeroVariance,

    #[error("operation requires a homogeneous probability vector")]
    NotHomogeneous,

    #[error("empty sample")]
    EmptySample,

    #[error("random variable is not centred (mean {0})")]
    NotCentred(f64),

    #[error("need at least {needed} items, got {got}")]
    TooFew { needed: usize, got: usize },

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("rational arithmetic requested but probability for size {0} has no exact value")]
    NotExact(usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
