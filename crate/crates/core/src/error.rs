use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed degree model `{spec}`: {reason}")]
    ModelSpec { spec: String, reason: String },

    #[error("degenerate degree model: {0}")]
    DegenerateModel(String),

    #[error("degree {degree} exceeds the configured cap {cap}")]
    DegreeCap { degree: usize, cap: usize },

    #[error("{what}: size {size} exceeds guard {cap}")]
    SizeGuard {
        what: &'static str,
        size: usize,
        cap: usize,
    },

    #[error("prime list is empty")]
    EmptyPrimeList,

    #[error("{0} is not an odd prime")]
    NotPrime(u64),

    #[error("rank disagreement across primes on a {n}-vertex core: {ranks:?}")]
    RankDisagreement { n: usize, ranks: Vec<(u64, usize)> },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed edge list at line {line}: {reason}")]
    EdgeList { line: usize, reason: String },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
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

pub type Result<T, E = Error> = std::result::Result<T, E>;
