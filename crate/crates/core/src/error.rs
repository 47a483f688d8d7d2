use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("singular matrix: pivot {pivot:.3e} at row {row} below threshold {threshold:.3e}")]
    Singular {
        row: usize,
        pivot: f64,
        threshold: f64,
    },

    #[error("solver breakdown at time step {step}: {reason}")]
    SolverBreakdown { step: usize, reason: String },

    #[error("nonlinear iteration did not converge at time step {step} (last residual {residual:.3e})")]
    NonlinearNonConvergence { step: usize, residual: f64 },

    #[error("fixed-point iteration diverged after {iterations} iterations (measured rate {rate:.4}); reduce the horizon or the data size")]
    Divergence {
        iterations: usize,
        rate: f64,
        history: Vec<f64>,
    },

    #[error("fixed-point iteration stopped at the iteration cap {iterations} with residual {residual:.3e} (measured rate {rate:.4})")]
    FixedPointCap {
        iterations: usize,
        residual: f64,
        rate: f64,
    },

    #[error("ratio undefined: {0}")]
    UndefinedRatio(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors raised by a PDE solve rather than by the caller's inputs.
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Error::Singular { .. } | Error::SolverBreakdown { .. } | Error::NonlinearNonConvergence { .. }
        )
    }

    pub fn is_divergence(&self) -> bool {
        matches!(self, Error::Divergence { .. } | Error::FixedPointCap { .. })
    }
}
