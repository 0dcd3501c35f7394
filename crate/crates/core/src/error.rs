use thiserror::Error;

/// Errors raised by the lab's kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("degenerate point: gradient norm {0:e} below threshold")]
    Degenerate(f64),
    #[error("flat direction: curvature {curvature:e} below tolerance {tolerance:e}")]
    FlatDirection { curvature: f64, tolerance: f64 },
    #[error("resolution too coarse: {0}")]
    Resolution(String),
    #[error("overflow: {0}")]
    Overflow(String),
    #[error("boundary tie within guard band at {} point(s), first {:?}", points.len(), points.first())]
    Tie { points: Vec<Vec<i64>> },
    #[error("quadrature did not converge: achieved {achieved:e}, target {target:e}")]
    Quadrature { achieved: f64, target: f64 },
    #[error("hypotheses violated: {0}")]
    Inapplicable(String),
    #[error("construction failed: {0}")]
    Construction(String),
    #[error("instance too large: {0} terms")]
    Size(u128),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
