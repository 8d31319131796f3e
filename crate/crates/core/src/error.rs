use thiserror::Error;

/// Errors raised by the estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("composition needs at least two components, got {0}")]
    TooFewComponents(usize),
    #[error("all entries are zero; cannot close composition")]
    ZeroSum,
    #[error("entry {index} is negative ({value})")]
    NegativeEntry { index: usize, value: f64 },
    #[error("entry {index} is not finite ({value})")]
    NonFinite { index: usize, value: f64 },
    #[error("values sum to {sum}, not 1")]
    NotClosed { sum: f64 },
    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("schema error: {0}")]
    Schema(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("lake mask error: {0}")]
    Mask(String),
    #[error("size limit exceeded: {0}")]
    Limit(String),

    #[error("degenerate fit: every p_hat is 0 or 1, so the mean-variance regression has no support")]
    DegenerateFit,
    #[error("zero variance: reported standard errors carry no signal, lambda would be infinite")]
    ZeroVariance,

    #[error("weighted lake-type proportion {0} is not positive")]
    ZeroLakeProportion(f64),

    #[error("observed proportion {value} at index {index} lies outside the clamp range")]
    BoundaryValue { index: usize, value: f64 },
    #[error("chains are degenerate: within-chain variance is zero")]
    DegenerateChains,
    #[error("posterior is degenerate: {rejected} of {total} draws have no lake-type mass")]
    DegeneratePosterior { rejected: usize, total: usize },
    #[error("cannot initialise latent counts: {0}")]
    Initialization(String),

    #[error("week {week}: rejection budget of {attempts} attempts exceeded")]
    RejectionBudgetExceeded { week: usize, attempts: u64 },
    #[error("method {method} failed on {failures} of {replicates} replicates")]
    TooManyFailures {
        method: String,
        failures: usize,
        replicates: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
