//! Build the evaluator a run configuration asks for.

use simopt_core::bridge::{
    Evaluator, ExternalEvaluator, ReplicatedEvaluator, SimEvaluator, SphereEvaluator,
};

use crate::config::{EvaluatorKind, RunConfig};
use crate::CliError;

pub fn build_evaluator(cfg: &RunConfig) -> Result<Box<dyn Evaluator>, CliError> {
    match &cfg.evaluator {
        EvaluatorKind::ChainSim {
            base,
            replicates,
            common_seeds,
        } => {
            let inner = SimEvaluator::new(base.clone(), &cfg.space)?;
            if *common_seeds {
                Ok(Box::new(ReplicatedEvaluator::with_fixed_seeds(
                    inner, cfg.seed, *replicates,
                )))
            } else if *replicates > 1 {
                Ok(Box::new(ReplicatedEvaluator::per_call(inner, *replicates)))
            } else {
                Ok(Box::new(inner))
            }
        }
        EvaluatorKind::External(spec) => {
            Ok(Box::new(ExternalEvaluator::new(spec.clone(), &cfg.space)?))
        }
        EvaluatorKind::Surrogate {
            optimum,
            delay,
            metric,
        } => {
            let (lb, ub) = cfg.space.bounds();
            Ok(Box::new(
                SphereEvaluator::new(optimum.clone(), lb, ub)
                    .with_delay(*delay)
                    .with_metric_name(metric.clone()),
            ))
        }
    }
}
