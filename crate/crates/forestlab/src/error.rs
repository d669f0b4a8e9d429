//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by simulation, fitting, and diagnostics.
#[derive(Debug, Error)]
pub enum Error {
    /// Parameters rejected before any work was done (dimensions, ranges, PD-ness).
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// An input value was NaN or infinite where a finite number is required.
    #[error("non-finite input: {0}")]
    NonFinite(String),

    /// A rejection sampler exceeded its iteration cap without accepting.
    #[error("rejection sampler stalled after {attempts} attempts")]
    SamplerStall { attempts: usize },

    /// A quadrature or root-finding routine failed to converge.
    #[error("numeric routine failed: {0}")]
    Numeric(String),

    /// Baseline loss is zero, so relative importance is undefined.
    #[error("degenerate baseline: estimated loss is zero")]
    DegenerateBaseline,

    /// Malformed CSV or model document.
    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
