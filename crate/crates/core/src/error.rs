use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("paths do not share a grid")]
    GridMismatch,
    #[error("invalid prior: {0}")]
    InvalidPrior(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("particle weights collapsed at step {step}")]
    WeightCollapse { step: usize },
    #[error("quadrature did not converge within {nodes} nodes")]
    QuadratureNotConverged { nodes: usize },
    #[error("time-reversal condition violated: gap {gap:e}")]
    ReversalCondition { gap: f64 },
    #[error("path {index}: {source}")]
    Path {
        index: u64,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
