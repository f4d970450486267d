use thiserror::Error;

/// Errors raised by density evaluation, quadrature and sampling.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// A conditioning value or parameter-map argument lies outside S(q).
    #[error("{name} = {value} lies outside the support [-{bound}, {bound}]")]
    Domain { name: &'static str, value: f64, bound: f64 },

    #[error("{what} did not converge within {terms} terms")]
    NonConvergence { what: &'static str, terms: usize },

    /// The normalising density of a conditional fell below the floor.
    #[error("conditioning density {value:e} is below the floor {floor:e}")]
    DegenerateConditioning { value: f64, floor: f64 },

    #[error("three-term recurrence is degenerate at index {index}")]
    DegenerateRecurrence { index: usize },

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::InvalidParameter { name, value, reason }
    }
}
