use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model specification: {0}")]
    InvalidSpec(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate model: {0}")]
    Degenerate(String),

    /// Retryable: the Gibbs strategy does not have an attempt budget.
    #[error(
        "rejection sampler exhausted {attempts} proposals for a single draw \
         (estimated orthant probability too small); retry with the gibbs strategy"
    )]
    RejectionExhausted { attempts: u64 },

    #[error("degenerate importance weights: {0}")]
    DegenerateWeights(String),
}

impl Error {
    pub fn is_retryable(&self) -> bool {
        matches!(self, Error::RejectionExhausted { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
