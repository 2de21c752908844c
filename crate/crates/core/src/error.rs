use thiserror::Error;

/// Errors raised by the solver stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The inner feasibility oracle ran out of iterations without either
    /// finding an `eps`-feasible point or certifying infeasibility.
    #[error("oracle budget exhausted after {iterations} iterations (best value {best}, lower bound {lower_bound})")]
    Budget {
        iterations: usize,
        best: f64,
        lower_bound: f64,
    },

    #[error("invalid bisection bracket: {0}")]
    Bracket(String),

    #[error("non-finite value from oracle at step {step}")]
    NonFinite { step: usize },

    #[error("oracle failure at iteration {iteration}: {source}")]
    Oracle {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
