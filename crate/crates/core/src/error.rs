use thiserror::Error;

/// Errors raised by the estimation pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is numerically singular after regularization (smallest shifted eigenvalue {min_shifted:e})")]
    NearSingular { min_shifted: f64 },

    #[error("matrix is not positive semidefinite (eigenvalue {min_eig:e} against largest {max_eig:e})")]
    NotPsd { min_eig: f64, max_eig: f64 },

    #[error("degenerate sample: all pairwise distances are zero")]
    DegenerateSample,

    #[error("invalid variable block: {0}")]
    InvalidBlock(String),

    #[error("sliced inverse regression matrix has only {available} usable eigenvalues, {requested} requested")]
    RankDeficient { available: usize, requested: usize },

    #[error("generalized cross validation is degenerate over the whole grid")]
    GcvDegenerate,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid ground truth: {0}")]
    InvalidTruth(String),

    #[error("replication failed for seed {seed}: {source}")]
    Replication {
        seed: u64,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
