use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

/// Coarse error classes, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Bad names, parameters or usage.
    Config,
    /// An operation's precondition does not hold for the given model.
    Precondition,
    /// A numerical routine failed to reach its tolerance.
    Solver,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("unknown model `{name}`; catalog: {catalog}")]
    UnknownModel { name: String, catalog: String },
    #[error("invalid parameter `{param}` for `{model}`: {reason}")]
    InvalidParameter {
        model: String,
        param: String,
        reason: String,
    },
    #[error("degenerate law: {0}")]
    DegenerateLaw(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("solver diverged: {0}")]
    SolverDiverged(String),
    #[error("quadrature did not converge (error estimate {estimate:e}, tolerance {tolerance:e})")]
    Quadrature { estimate: f64, tolerance: f64 },
    #[error("usage error: {0}")]
    Usage(String),
    #[error("fit error: {0}")]
    Fit(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::UnknownModel { .. } | Error::InvalidParameter { .. } | Error::Usage(_) => {
                ErrorCategory::Config
            }
            Error::DegenerateLaw(_) | Error::Precondition(_) => ErrorCategory::Precondition,
            Error::SolverDiverged(_) | Error::Quadrature { .. } | Error::Fit(_) | Error::Invariant(_) => {
                ErrorCategory::Solver
            }
        }
    }

    pub(crate) fn invalid(model: &str, param: &str, reason: &str) -> Self {
        Error::InvalidParameter {
            model: model.into(),
            param: param.into(),
            reason: reason.into(),
        }
    }
}
