//! Error types shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed group data (Cayley table not a group, bad indices, ...).
    #[error("structural error: {0}")]
    Structure(String),

    /// A caller violated an operation contract.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Character-table computation degenerated beyond tolerance.
    #[error("character table diagnostics: {0}")]
    Diagnostics(String),

    /// A map expected to be invertible is singular.
    #[error("singular map: smallest singular value {smallest:.3e} below cutoff {cutoff:.3e}")]
    SingularMap { smallest: f64, cutoff: f64 },

    /// A complex expected to be acyclic has cohomology.
    #[error("complex not acyclic; Betti numbers {betti:?} starting at degree {degree_min}")]
    NotAcyclic { degree_min: i64, betti: Vec<usize> },

    /// A mapping cone expected to be acyclic is not.
    #[error("not a quasi-isomorphism; cone has Betti numbers {betti:?}")]
    NotQuasiIso { betti: Vec<usize> },

    /// Numeric evaluation could not reach the requested accuracy.
    #[error("requested accuracy {requested:.3e} not reached; achieved bound {achieved:.3e}")]
    Precision { requested: f64, achieved: f64 },

    /// A built-in space cannot realize the requested restriction.
    #[error("unsupported space: {0}")]
    UnsupportedSpace(String),

    /// Two computations that must agree disagree beyond tolerance.
    #[error("mismatch in {what}: deviation {deviation:.3e}")]
    Mismatch { what: String, deviation: f64 },

    /// Invalid input file or schema.
    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
