//! Command implementations behind the `simopt` binary: config loading and
//! validation, the optimization driver, the warm-start/concurrency ablation
//! grid, the standalone simulator command, and warm-start store
//! administration.

pub mod ablate;
pub mod config;
pub mod evaluators;
pub mod reportio;
pub mod runner;
pub mod simulate;
pub mod warmdb;

/// Command failures, split by exit code: validation problems exit 1,
/// runtime failures exit 2.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Runtime(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(msg) => write!(f, "invalid configuration: {msg}"),
            CliError::Runtime(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl From<simopt_core::param::ParamError> for CliError {
    fn from(e: simopt_core::param::ParamError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<simopt_core::optimizer::OptimizerError> for CliError {
    fn from(e: simopt_core::optimizer::OptimizerError) -> Self {
        match e {
            simopt_core::optimizer::OptimizerError::InvalidConfig(_) => {
                CliError::Validation(e.to_string())
            }
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<simopt_core::bridge::EvalError> for CliError {
    fn from(e: simopt_core::bridge::EvalError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<simopt_core::chainsim::SimError> for CliError {
    fn from(e: simopt_core::chainsim::SimError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<simopt_core::warmstart::WarmStartError> for CliError {
    fn from(e: simopt_core::warmstart::WarmStartError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}
