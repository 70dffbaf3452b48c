use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid sparsity: {0}")]
    InvalidSparsity(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("argument outside the domain: {0}")]
    Domain(String),

    #[error("disparity ratio undefined: {0}")]
    UndefinedRatio(String),

    /// The column picked at `iteration` (1-based) lies numerically in the
    /// span of the columns selected before it.
    #[error("degenerate selection at iteration {iteration}: column {column} is numerically dependent on the selected set")]
    DegenerateSelection { iteration: usize, column: usize },

    #[error("instance too large for exhaustive search: C({n}, {k}) exceeds {limit}")]
    InstanceTooLarge { n: usize, k: usize, limit: u64 },

    #[error("trial {trial} failed at m={m}, K={k}, case={case}: {source}")]
    TrialFailed {
        m: usize,
        k: usize,
        case: String,
        trial: u64,
        #[source]
        source: Box<Error>,
    },
}
