use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("network contains a cycle through: {}", .0.join(", "))]
    CyclicNetwork(Vec<String>),

    #[error("incomplete CPT for `{var}`: {detail}")]
    IncompleteCpt { var: String, detail: String },

    #[error("CPT row {row} of `{var}` sums to {sum}, expected 1")]
    UnnormalizedRow { var: String, row: usize, sum: f64 },

    #[error("bad reference: {0}")]
    BadReference(String),

    #[error("parse error at {line}:{col}: {message}")]
    Parse {
        line: usize,
        col: usize,
        message: String,
    },

    #[error("cannot extend a complete world")]
    DepthExceeded,

    #[error("state space of {worlds:e} worlds exceeds the enumeration cap of {cap}")]
    TooLarge { worlds: f64, cap: u64 },

    #[error("observation has zero probability")]
    ZeroEvidence,

    #[error("not an expectation failure: {0}")]
    NotAFailure(String),

    #[error("invalid probability mass {0}")]
    InvalidMass(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
