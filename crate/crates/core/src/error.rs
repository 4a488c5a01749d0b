use thiserror::Error;

/// Errors produced by the core library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("basis rank {rank} out of range for a basis of size {size}")]
    RankOutOfRange { rank: usize, size: usize },

    #[error("multi-index degree {degree} exceeds cutoff {cutoff}")]
    DegreeExceedsCutoff { degree: u32, cutoff: u32 },

    #[error("truncation rank {rank} (d={dimension}, N={cutoff}) exceeds the safety cap {cap}")]
    CapExceeded {
        rank: u128,
        dimension: usize,
        cutoff: u32,
        cap: usize,
    },

    #[error("coefficients are not Hermitian-symmetric: {detail}")]
    NotHermitian { detail: String },

    #[error("point is off the unit sphere: | ||z|| - 1 | = {deviation:e}")]
    OffSphere { deviation: f64 },

    #[error("test function undefined at value {value}")]
    FunctionDomain { value: f64 },

    #[error("non-positive eigenvalue {value} (threshold {threshold:e})")]
    NonPositive { value: f64, threshold: f64 },

    #[error("operation requires the Drury-Arveson weight family")]
    RequiresDruryArveson,

    #[error("mixed-word trace requires distinct words")]
    EqualWords,

    #[error("symbolic expansion produced {terms} monomial pairs, over the cap {cap}; use Monte Carlo integration instead")]
    ExpansionCapExceeded { terms: usize, cap: usize },

    #[error("eigensolver failed to converge for {provenance}")]
    EigenFailure { provenance: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("symbol file {path}: {message}")]
    SymbolFile { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
