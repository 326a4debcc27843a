use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension {0}: expected an odd integer >= 3")]
    InvalidDimension(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("sampling produced a non-finite value {value} at node {node} (r = {r})")]
    Sampling { node: usize, r: f64, value: f64 },

    #[error("invalid Lorentz index (p = {p}, z = {z}): {reason}")]
    Index { p: f64, z: f64, reason: &'static str },

    #[error("admissibility: {0}")]
    Admissibility(String),

    #[error("degenerate region: {0}")]
    Geometry(String),

    #[error("unknown exponent vertex `{0}`")]
    UnknownVertex(String),

    #[error("invalid model parameter: {0}")]
    InvalidParameter(String),

    #[error("spectral plan self-test failed: round-trip error {achieved:.3e} exceeds {limit:.1e}")]
    PlanConstruction { achieved: f64, limit: f64 },

    #[error("field lives on a different grid than the operation expects")]
    GridMismatch,

    #[error("non-finite source value at time node {node} (t = {t})")]
    Overflow { node: usize, t: f64 },

    #[error("Picard map is not contracting (ratios {ratios:?}); reduce c1, c2 or the data size")]
    NonContraction { ratios: Vec<f64> },

    #[error("Picard iteration did not converge in {iterations} iterations (last increment {increment:.3e})")]
    NoConvergence { iterations: usize, increment: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
