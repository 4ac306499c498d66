//! Brute-force reference computations.
//!
//! Everything here is written directly from definitions and shares no code
//! with `robertson-core`. The core test suites compare their results against
//! these routines; nothing in the main computation paths calls into this
//! crate.

pub mod brute;
pub mod closed_form;
pub mod grid;
pub mod kummer;
pub mod report;
pub mod sampler;
pub mod seeds;

pub use num_complex::Complex64 as C64;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("series did not converge within {terms} terms (last term {last_term:e})")]
    NoConvergence { terms: usize, last_term: f64 },
    #[error("Kummer parameter b = {0} is a nonpositive integer")]
    PoleInB(C64),
    #[error("wavefunction has boundary amplitude {ratio:e} relative to its maximum")]
    BoundaryMass { ratio: f64 },
    #[error("grid and sample lengths differ ({grid} vs {samples})")]
    GridMismatch { grid: usize, samples: usize },
    #[error("degenerate parameters: {0}")]
    Degenerate(String),
    #[error("seed manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, OracleError>;
