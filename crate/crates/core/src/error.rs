use thiserror::Error;

/// Errors raised by the fairness audit library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid population: n={n}, n_p={n_p} (need n >= 1 and 0 <= n_p <= n)")]
    InvalidPopulation { n: usize, n_p: usize },

    #[error("{name} must lie in {range}, got {value}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("{name}={value} is out of range [{min}, {max}]")]
    OutOfRange {
        name: &'static str,
        value: i64,
        min: i64,
        max: i64,
    },

    #[error("odds ratio is undefined for a population with n_p={n_p} of n={n}")]
    DegenerateOdds { n: usize, n_p: usize },

    #[error(
        "ranking has length {len} with {protected} protected, population expects n={n}, n_p={n_p}"
    )]
    InconsistentRanking {
        len: usize,
        protected: usize,
        n: usize,
        n_p: usize,
    },

    #[error("ranking ids must be unique and match the group sequence length: {0}")]
    InvalidIds(String),

    #[error(
        "constraint at position {position} needs {required} protected but only {available} remain"
    )]
    InfeasibleConstraint {
        position: usize,
        required: usize,
        available: usize,
    },

    #[error("{0} is not supported for this operation")]
    UnsupportedModel(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
