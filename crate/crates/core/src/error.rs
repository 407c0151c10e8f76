use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("missing metadata: objective has no {0}")]
    MissingMetadata(&'static str),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("non-finite value encountered at x = {x:?}")]
    NonFinite { x: Vec<f64> },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("inadmissible noise: {0}")]
    InadmissibleNoise(String),

    #[error("exponent out of range: {0}")]
    ExponentRange(String),

    #[error("inconsistent exponents: 2 + 1/(p1-2) = {lhs} but 1/(2-p2) = {rhs}")]
    Inconsistent { lhs: f64, rhs: f64 },

    #[error("no step size on the grid passed validation; try a finer grid")]
    SearchFailed,

    #[error("trajectory diverged at t = {t}; last finite state {last:?}")]
    Diverged { t: f64, last: Vec<f64> },

    #[error("config error: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn non_finite(x: &crate::Vector) -> Error {
    Error::NonFinite {
        x: x.iter().copied().collect(),
    }
}
