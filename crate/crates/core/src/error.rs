use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A denominator of the model vanished: the state left the admissible set.
    #[error("division guard at t = {t}: {what}")]
    DivisionGuard { t: f64, what: &'static str },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid step size {dt} for interval of length {span}")]
    StepSize { dt: f64, span: f64 },

    #[error("grid mismatch: expected {expected} samples, got {actual}")]
    GridMismatch { expected: usize, actual: usize },

    #[error("shooting did not converge after {iterations} iterations (best |residual| = {best_residual:e} at p0 = {best_p0})")]
    NoConvergence {
        iterations: usize,
        best_residual: f64,
        best_p0: f64,
    },

    #[error("linear solver breakdown: {0}")]
    SolverBreakdown(String),

    #[error("singular system: {0}")]
    Singular(&'static str),

    #[error("eigenvalue iteration did not converge after {0} iterations")]
    EigenNoConvergence(usize),

    #[error("Riccati solution blew up at t = {t} (norm {norm:e})")]
    RiccatiBlowUp { t: f64, norm: f64 },

    #[error("forward-backward sweep did not converge after {iterations} iterations (last control change {last_change:e})")]
    SweepNoConvergence {
        iterations: usize,
        last_change: f64,
        cost_history: Vec<f64>,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
