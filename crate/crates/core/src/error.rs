use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Caller passed arguments that cannot be combined (family or size mismatch).
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Observation model or problem instance violates an invariant.
    #[error("invalid model: {0}")]
    Model(String),

    /// KL divergence between two models is infinite.
    #[error("infinite divergence{}", format_location(location))]
    InfiniteDivergence { location: Option<(usize, usize, usize)> },

    /// Simplex solver did not converge or produced an unusable vertex.
    #[error("solver failure: {0}")]
    Solver(String),

    /// Some hypothesis has a zero optimal objective; the instance cannot be solved.
    #[error("hypothesis {hypothesis} has zero guiding objective value; instance is not identifiable")]
    InvalidInstance { hypothesis: usize },

    #[error("numerical failure: {0}")]
    Numeric(String),
}

fn format_location(loc: &Option<(usize, usize, usize)>) -> String {
    match loc {
        Some((i, j, a)) => format!(" at (i={i}, j={j}, a={a})"),
        None => String::new(),
    }
}

impl Error {
    /// Short machine-readable tag for the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Argument(_) => "argument",
            Error::Model(_) => "model",
            Error::InfiniteDivergence { .. } => "infinite_divergence",
            Error::Solver(_) => "solver",
            Error::InvalidInstance { .. } => "invalid_instance",
            Error::Numeric(_) => "numeric",
        }
    }
}
