use serde::Serialize;
use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    /// The run finished but the mode's acceptance check failed.
    pub const CHECK_FAILED: i32 = 1;
    pub const VALIDATION: i32 = 2;
    pub const SOLVER: i32 = 3;
    pub const DIVERGENCE: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid scenario:\n  - {}", .0.join("\n  - "))]
    Validation(Vec<String>),

    #[error("{module}: {source}")]
    Core {
        module: &'static str,
        #[source]
        source: kawahara::Error,
    },

    #[error("i/o on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Io { .. } => exit::VALIDATION,
            CliError::Core { source, .. } => core_exit_code(source),
        }
    }

    pub fn record(&self) -> ErrorRecord {
        let (module, kind, history) = match self {
            CliError::Validation(_) => ("cli-app", "validation", None),
            CliError::Io { .. } => ("cli-app", "io", None),
            CliError::Core { module, source } => {
                let history = match source {
                    kawahara::Error::Divergence { history, .. } => Some(history.clone()),
                    _ => None,
                };
                (*module, core_kind(source), history)
            }
        };
        ErrorRecord {
            module: module.to_string(),
            kind: kind.to_string(),
            message: match self {
                CliError::Core { source, .. } => source.to_string(),
                other => other.to_string(),
            },
            exit_code: self.exit_code(),
            history,
        }
    }
}

fn core_kind(e: &kawahara::Error) -> &'static str {
    use kawahara::Error as E;
    match e {
        E::Config(_) => "config",
        E::Argument(_) => "argument",
        E::Precondition(_) => "precondition",
        E::Singular { .. } => "singular",
        E::SolverBreakdown { .. } => "solver-breakdown",
        E::NonlinearNonConvergence { .. } => "nonlinear-nonconvergence",
        E::Divergence { .. } => "divergence",
        E::FixedPointCap { .. } => "fixed-point-cap",
        E::UndefinedRatio(_) => "undefined-ratio",
        E::Io(_) => "io",
        E::Json(_) => "json",
    }
}

fn core_exit_code(e: &kawahara::Error) -> i32 {
    if e.is_divergence() {
        exit::DIVERGENCE
    } else if e.is_solver_failure() || matches!(e, kawahara::Error::UndefinedRatio(_)) {
        exit::SOLVER
    } else {
        exit::VALIDATION
    }
}

/// Serialized form of a failure, persisted with the run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorRecord {
    /// Component that raised the error.
    pub module: String,
    pub kind: String,
    pub message: String,
    pub exit_code: i32,
    /// Outer-iterate differences, for divergence.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub history: Option<Vec<f64>>,
}

/// Tags a core result with the component it came from.
pub(crate) trait Provenance<T> {
    fn in_module(self, module: &'static str) -> Result<T, CliError>;
}

impl<T> Provenance<T> for kawahara::Result<T> {
    fn in_module(self, module: &'static str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Core { module, source })
    }
}
