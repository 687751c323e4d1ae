use std::path::PathBuf;

/// Errors produced anywhere in the release toolkit.
#[derive(Debug, thiserror::Error)]
#[non_exhaustive]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The full domain is too large to perturb cell by cell.
    #[error("full-domain release infeasible: domain has {cells} cells (~2^{log2:.1}), cap is {cap}")]
    Infeasible { cells: u128, log2: f64, cap: u128 },

    #[error("domain size overflows 128 bits")]
    DomainOverflow,

    #[error("row {row}, column `{column}`: {message}")]
    Validation {
        row: usize,
        column: String,
        message: String,
    },

    #[error("header mismatch: expected {expected:?}, found {found:?}")]
    Header {
        expected: Vec<String>,
        found: Vec<String>,
    },

    #[error("stop `{0}` has no entry in the aggregation map")]
    UnmappedStop(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error(
        "budget cap exceeded: totals would be (epsilon={epsilon}, delta={delta:e}), \
         cap is (epsilon={cap_epsilon}, delta={cap_delta:e})"
    )]
    BudgetExceeded {
        epsilon: f64,
        delta: f64,
        cap_epsilon: f64,
        cap_delta: f64,
    },

    #[error("no data: {0}")]
    NoData(String),

    #[error("malformed bundle: {0}")]
    MalformedBundle(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("config: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
