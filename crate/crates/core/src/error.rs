use thiserror::Error;

/// Errors raised by the simulation, pricing and diagnostics layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A kernel was evaluated outside of its domain (t <= 0).
    #[error("kernel evaluated outside its domain at t = {t}")]
    KernelDomain { t: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The increment stream or weight table does not match the time grid.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A single path produced a non-finite value.
    #[error("path {path} produced a non-finite {quantity} at step {step}")]
    PathFault {
        path: u64,
        step: usize,
        quantity: &'static str,
    },

    /// At least one path of a Monte-Carlo run faulted; the run is rejected.
    #[error("{count} of {num_paths} paths faulted (first: {first})")]
    FaultedRun {
        count: usize,
        num_paths: usize,
        first: Box<Error>,
    },

    #[error("quadrature did not reach tolerance {tolerance:e} on [{a}, {b}] (estimate {estimate:e})")]
    Quadrature {
        a: f64,
        b: f64,
        tolerance: f64,
        estimate: f64,
    },

    #[error("Volterra solver failed: {0}")]
    Solver(String),

    #[error("Fourier inversion did not converge: {0}")]
    Inversion(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
