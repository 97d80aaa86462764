//! Uniform evaluator contract between optimizers and simulators, with an
//! in-process adapter for the built-in chain simulator and a child-process
//! adapter speaking a line-based metrics protocol.

mod adapters;
mod external;

pub use adapters::{ReplicatedEvaluator, SimEvaluator, SphereEvaluator};
pub use external::{parse_metric_lines, ExternalEvaluator, ExternalSimSpec};

use thiserror::Error;

use crate::param::{ArgumentVector, SimResult};

/// Anything that can turn a full argument vector plus a seed into measured
/// metrics. Implementations must be safe to call concurrently from multiple
/// workers; the in-process adapter is pure with respect to `(args, seed)`.
pub trait Evaluator: Send + Sync {
    fn evaluate(&self, args: &ArgumentVector, seed: u64) -> Result<SimResult, EvalError>;
}

impl<E: Evaluator + ?Sized> Evaluator for &E {
    fn evaluate(&self, args: &ArgumentVector, seed: u64) -> Result<SimResult, EvalError> {
        (**self).evaluate(args, seed)
    }
}

impl<E: Evaluator + ?Sized> Evaluator for Box<E> {
    fn evaluate(&self, args: &ArgumentVector, seed: u64) -> Result<SimResult, EvalError> {
        (**self).evaluate(args, seed)
    }
}

/// Evaluation failures. The executor records these per candidate; the
/// optimizer then assigns the worst possible objective value and keeps going.
#[derive(Debug, Clone, Error)]
pub enum EvalError {
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("invalid evaluator config: {0}")]
    Config(String),
    #[error("failed to launch `{executable}`: {reason}")]
    Launch { executable: String, reason: String },
    #[error("simulator timed out after {timeout_s}s")]
    Timeout { timeout_s: f64 },
    #[error("simulator exited with {status}: {stderr}")]
    NonZeroExit { status: String, stderr: String },
    #[error("missing metric: {0}")]
    MissingMetric(String),
    #[error("i/o while talking to simulator: {0}")]
    Io(String),
}
