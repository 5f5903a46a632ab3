use thiserror::Error;

/// Errors raised by the fitting engine.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A combinatorial routine would exceed its work cap.
    #[error("capacity exceeded for {what}: {size} > {cap}")]
    Capacity {
        what: &'static str,
        size: f64,
        cap: f64,
    },

    /// The data do not form a usable survival structure.
    #[error("invalid structure: {0}")]
    Structure(String),

    /// Input text could not be parsed.
    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    /// A non-binary covariate has zero variance.
    #[error("degenerate covariate `{0}`: zero variance")]
    DegenerateCovariate(String),

    /// A numerical routine produced a value that signals corruption.
    #[error("numerical failure: {0}")]
    Numeric(String),

    /// The information matrix could not be inverted.
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    /// The optimizer ran out of iterations.
    #[error("no convergence after {iterations} iterations (gradient max-norm {grad_norm:e})")]
    NonConvergence {
        iterations: usize,
        grad_norm: f64,
        last_iterate: Vec<f64>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad input rather than numerical trouble.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::Structure(_)
                | Error::Parse { .. }
                | Error::DegenerateCovariate(_)
                | Error::Io(_)
        )
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Capacity { .. } => "capacity",
            Error::Structure(_) => "structure",
            Error::Parse { .. } => "parse",
            Error::DegenerateCovariate(_) => "degenerate_covariate",
            Error::Numeric(_) => "numeric",
            Error::DegenerateFit(_) => "degenerate_fit",
            Error::NonConvergence { .. } => "non_convergence",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
