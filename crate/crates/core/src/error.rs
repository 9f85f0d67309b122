use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("continued branch lost near t = {t}")]
    BranchLost { t: f64 },

    #[error("ill-conditioned linear system: {0}")]
    IllConditioned(String),

    #[error("EPR ground space is degenerate or empty")]
    DegenerateEpr,

    #[error("N = {n} exceeds the limit {limit} for {what}")]
    TooLarge {
        n: usize,
        limit: usize,
        what: &'static str,
    },

    #[error("eigendecomposition failed")]
    Eigen,

    #[error("fit failed: {0}")]
    Fit(String),
}

impl Error {
    /// Stable machine-readable reason code.
    pub fn reason(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::NotConverged { .. } => "not_converged",
            Error::BranchLost { .. } => "branch_lost",
            Error::IllConditioned(_) => "ill_conditioned",
            Error::DegenerateEpr => "degenerate_epr",
            Error::TooLarge { .. } => "too_large",
            Error::Eigen => "eigen_failed",
            Error::Fit(_) => "fit_failed",
        }
    }

    /// True for failures of an iterative solver to reach its tolerance.
    pub fn is_convergence_failure(&self) -> bool {
        matches!(
            self,
            Error::NotConverged { .. } | Error::BranchLost { .. } | Error::Fit(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
