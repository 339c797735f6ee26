use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {op}: {detail}")]
    Dimension { op: &'static str, detail: String },
    #[error("matrix is singular")]
    Singular,
    #[error("exact arithmetic requested on a matrix with floating entries")]
    NotExact,
    #[error("invalid block: {0}")]
    InvalidBlock(String),
    #[error("census inconsistency: {0}")]
    Census(String),
    #[error("matrices are not similar")]
    NotSimilar,
    #[error("similarity search exhausted its retry budget (inconclusive)")]
    SimilaritySearchExhausted,
    #[error("matrix square root failed: {0}")]
    SqrtFailure(String),
    #[error("matrices are not congruent")]
    NotCongruent,
    #[error("no congruence witness found within budget (inconclusive)")]
    CongruenceNotFound,
    #[error("unsupported absorption: {0}")]
    UnsupportedAbsorption(String),
    #[error("unpaired H4(1) blocks present; pair each one with an H2(-1) first")]
    UnpairedH4,
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("construction budget exhausted: {0}")]
    ConstructionBudget(String),
    #[error("parse error at byte {position}: {message}")]
    Parse { position: usize, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn dim(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Dimension {
            op,
            detail: detail.into(),
        }
    }

    pub fn parse(position: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            position,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
