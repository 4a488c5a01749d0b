//! Finite truncations of Toeplitz-like operators on the Drury-Arveson space.
//!
//! The library builds exact matrix truncations `P_N T P_N` of operators
//! `T = Σ c_{αβ} S^{β*} S^α + K` generated by the commuting shifts `S_i`
//! on the Drury-Arveson space (and weighted Bergman variants), computes
//! their empirical eigenvalue distributions, and checks them against the
//! push-forward of normalized surface measure on the unit sphere under the
//! operator symbol. Combinatorial identities behind the trace limits are
//! available in exact big-integer/rational arithmetic.

pub mod diagnostics;
pub mod error;
pub mod measure;
pub mod multiindex;
pub mod operator;
pub mod spectral;

pub use error::{Error, Result};
pub use multiindex::{GradedBasisIndexer, MultiIndex};
pub use operator::{
    CompactPerturbation, HermitianSymbol, SymmetryMode, TruncatedOperator, WeightFamily,
};
pub use spectral::EmpiricalSpectralDistribution;
