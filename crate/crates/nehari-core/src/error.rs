//! Error type shared by every module of the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A scalar input is outside its admissible range or non-finite.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Two fields (or a field and a grid) do not live on the same grid.
    #[error("grid mismatch: {0}")]
    GridMismatch(&'static str),

    /// An exponent tuple violates an admissibility condition.
    #[error("inadmissible exponents: {0}")]
    Admissibility(String),

    /// The fiber map has no positive critical point for the given field.
    #[error("Nehari projection undefined: {0}")]
    ProjectionUndefined(String),

    /// A bubble core is narrower than the grid can represent.
    #[error(
        "unresolved bubble core: core width {core_width:.3e} needs node spacing \
         <= {required_spacing:.3e} near the origin, grid provides {available_nodes} node(s) inside the core"
    )]
    Resolution {
        core_width: f64,
        required_spacing: f64,
        available_nodes: usize,
    },

    /// Input/output failure while writing reports.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
