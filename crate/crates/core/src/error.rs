use thiserror::Error;

/// Errors raised by the library.
///
/// Variants split into structural errors (bad input, bad arguments) and
/// domain findings (a chain that does not exist, a point that cannot be
/// snapped). [`Error::is_domain`] tells them apart; the CLI maps the first
/// group to exit status 2 and the second to exit status 1.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("not a valid metric: {0}")]
    InvalidMetric(String),

    #[error("unknown point label `{0}`")]
    UnknownLabel(String),

    #[error("sampled link(C) fails at eps={eps}: no chain from point {u} to point {v}")]
    LinkBroken { u: usize, v: usize, eps: f64 },

    #[error("no chain from point {u} to point {v} at scale 2^-{level}")]
    ChainMissing { u: usize, v: usize, level: u32 },

    #[error("no pool point within {radius} of point {point} (nearest is at {nearest})")]
    NoPoolPoint {
        point: usize,
        radius: f64,
        nearest: f64,
    },

    #[error("degenerate embedding: points {u} and {v} have the same image")]
    Degenerate { u: usize, v: usize },

    #[error("point {point} at level {level} has no net member within {radius}")]
    Uncovered {
        level: usize,
        point: usize,
        radius: f64,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for findings about the data (exit status 1), false for
    /// malformed input or arguments (exit status 2).
    pub fn is_domain(&self) -> bool {
        matches!(
            self,
            Error::LinkBroken { .. }
                | Error::ChainMissing { .. }
                | Error::NoPoolPoint { .. }
                | Error::Degenerate { .. }
                | Error::Uncovered { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
