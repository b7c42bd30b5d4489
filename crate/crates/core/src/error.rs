use thiserror::Error;

/// Errors raised by grids, paths, problems, steppers and experiments.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SdeError {
    #[error("invalid time grid: {0}")]
    Grid(String),

    #[error("cannot aggregate {n} steps by a factor of {factor}")]
    Aggregation { n: usize, factor: usize },

    #[error("grid index {index} out of range 0..={n}")]
    Index { index: usize, n: usize },

    #[error("missing capability: {0}")]
    Capability(String),

    #[error("interpretation mismatch: {0}")]
    Interpretation(String),

    #[error("non-finite {stage} at t = {t}, x = {x:?}")]
    NonFinite {
        stage: &'static str,
        t: f64,
        x: Vec<f64>,
    },

    #[error("invalid sign value {0}; signs must be -1, 0 or +1")]
    Sign(f64),

    #[error("slope undefined: {usable} usable point(s), need at least 2")]
    UndefinedSlope { usable: usize },

    #[error("invalid experiment configuration: {0}")]
    Config(String),

    #[error("unknown problem id `{0}`")]
    UnknownProblem(String),

    #[error("malformed report: {0}")]
    Report(String),
}

pub type Result<T, E = SdeError> = std::result::Result<T, E>;
