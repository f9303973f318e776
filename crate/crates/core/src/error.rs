use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A configured cap (depth, denominator size, interval budget, matrix
    /// size) would be exceeded. Callers may retry with larger caps.
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    /// The requested operation needs a map class the exact pipeline does not
    /// support (e.g. a non-affine branch).
    #[error("unsupported map: {0}")]
    UnsupportedMap(String),

    /// An argument fell outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// No closed-form EI is known for the given map.
    #[error("no closed-form extremal index for map `{0}`")]
    NoClosedForm(String),

    /// Power iteration did not settle within the iteration cap; carries the
    /// last two Rayleigh iterates.
    #[error("power iteration did not converge within {iterations} iterations (last iterates {previous}, {last})")]
    NonConvergence {
        iterations: usize,
        previous: f64,
        last: f64,
    },

    /// Malformed input (spec files, serialized sets, bad parameters).
    #[error("invalid input: {0}")]
    Invalid(String),
}
