use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("negative entry {value} at {location}")]
    NegativeEntry { location: String, value: f64 },
    #[error("column {0} sums to zero")]
    ZeroColumn(usize),
    #[error("{what} sums to {sum}, expected 1")]
    NotNormalized { what: String, sum: f64 },
    #[error("enumeration of {requested} entries exceeds the cap of {cap}")]
    EnumerationCapExceeded { requested: u128, cap: usize },
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),
    #[error("language-model matrix is rank deficient (rank {rank} < {columns})")]
    RankDeficientInput { rank: usize, columns: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("filter starvation: {accepted} accepted in {draws} draws")]
    FilterStarvation { accepted: usize, draws: usize },
    #[error("no counterexample found after {tries} tries")]
    NotFound { tries: usize },
    #[error("training diverged at iteration {iteration}")]
    DivergenceDetected { iteration: usize },
    #[error("corpus has no usable sequences")]
    EmptyCorpus,
    #[error("vocabulary of {size} tokens exceeds the cap of {cap}")]
    VocabTooLarge { size: usize, cap: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
