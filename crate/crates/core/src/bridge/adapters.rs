//! In-process adapters: the built-in chain simulator behind the evaluator
//! contract, a replication wrapper that averages several seeds per
//! evaluation, and a deterministic surrogate benchmark.

use std::time::{Duration, Instant};

use super::{EvalError, Evaluator};
use crate::chainsim::{run_simulation, SimConfig};
use crate::param::{ArgumentVector, ParameterSpace, SimResult};
use crate::seeds;

/// Binds the built-in chain simulator behind the evaluator contract. Each
/// argument-vector slot is applied to the base config by parameter name.
#[derive(Debug, Clone)]
pub struct SimEvaluator {
    base: SimConfig,
    param_names: Vec<String>,
}

impl SimEvaluator {
    pub fn new(base: SimConfig, space: &ParameterSpace) -> Result<Self, EvalError> {
        let param_names: Vec<String> =
            space.params().iter().map(|p| p.name().to_string()).collect();
        for name in &param_names {
            if !SimConfig::is_known_param(name) {
                return Err(EvalError::UnknownParameter(name.clone()));
            }
        }
        Ok(SimEvaluator { base, param_names })
    }
}

impl Evaluator for SimEvaluator {
    fn evaluate(&self, args: &ArgumentVector, seed: u64) -> Result<SimResult, EvalError> {
        if args.len() != self.param_names.len() {
            return Err(EvalError::Config(format!(
                "argument vector has {} values for {} parameters",
                args.len(),
                self.param_names.len()
            )));
        }
        let mut cfg = self.base.clone();
        for (name, &value) in self.param_names.iter().zip(args.values()) {
            cfg.apply(name, value)
                .map_err(|e| EvalError::Config(e.to_string()))?;
        }
        cfg.seed = seed;
        run_simulation(&cfg).map_err(|e| EvalError::Config(e.to_string()))
    }
}

/// How the replication wrapper picks its per-replicate seeds.
enum ReplicateSeeds {
    /// The same seed set for every candidate and iteration of a run. Makes
    /// the seed-averaged metrics a deterministic function of the arguments,
    /// so noisy constraint boundaries stay put while the optimizer probes
    /// them.
    Fixed(Vec<u64>),
    /// Derived from the incoming per-candidate seed; every evaluation sees
    /// fresh replicates.
    PerCall(usize),
}

/// Averages an inner evaluator over several seeds per evaluation.
pub struct ReplicatedEvaluator<E> {
    inner: E,
    seeds: ReplicateSeeds,
}

impl<E: Evaluator> ReplicatedEvaluator<E> {
    /// Fixed per-run seed set of size `count`, derived from `run_seed`.
    pub fn with_fixed_seeds(inner: E, run_seed: u64, count: usize) -> Self {
        let seed_set = (0..count as u64)
            .map(|r| seeds::replicate_seed(run_seed, r))
            .collect();
        ReplicatedEvaluator {
            inner,
            seeds: ReplicateSeeds::Fixed(seed_set),
        }
    }

    /// `count` replicates derived from each evaluation's own seed.
    pub fn per_call(inner: E, count: usize) -> Self {
        ReplicatedEvaluator {
            inner,
            seeds: ReplicateSeeds::PerCall(count.max(1)),
        }
    }
}

impl<E: Evaluator> Evaluator for ReplicatedEvaluator<E> {
    fn evaluate(&self, args: &ArgumentVector, seed: u64) -> Result<SimResult, EvalError> {
        let seed_list: Vec<u64> = match &self.seeds {
            ReplicateSeeds::Fixed(s) => s.clone(),
            ReplicateSeeds::PerCall(count) => (0..*count as u64)
                .map(|r| seeds::replicate_seed(seed, r))
                .collect(),
        };
        if seed_list.is_empty() {
            return Err(EvalError::Config("replicate count must be positive".into()));
        }
        let mut acc: Option<SimResult> = None;
        for &s in &seed_list {
            let r = self.inner.evaluate(args, s)?;
            acc = Some(match acc {
                None => r,
                Some(mut sum) => {
                    for (k, v) in r.values {
                        *sum.values.entry(k).or_insert(0.0) += v;
                    }
                    for (k, v) in r.diagnostics {
                        *sum.diagnostics.entry(k).or_insert(0.0) += v;
                    }
                    sum
                }
            });
        }
        let mut mean = acc.expect("at least one replicate");
        let n = seed_list.len() as f64;
        mean.values.values_mut().for_each(|v| *v /= n);
        mean.diagnostics.values_mut().for_each(|v| *v /= n);
        Ok(mean)
    }
}

/// Shifted-sphere benchmark: reports the squared distance to a known optimum
/// in bound-normalized coordinates, optionally burning a fixed amount of CPU
/// per evaluation to stand in for a slow simulator.
pub struct SphereEvaluator {
    optimum: Vec<f64>,
    lb: Vec<f64>,
    ub: Vec<f64>,
    delay: Duration,
    metric: String,
}

impl SphereEvaluator {
    pub fn new(optimum: Vec<f64>, lb: Vec<f64>, ub: Vec<f64>) -> Self {
        assert_eq!(optimum.len(), lb.len());
        assert_eq!(optimum.len(), ub.len());
        SphereEvaluator {
            optimum,
            lb,
            ub,
            delay: Duration::ZERO,
            metric: "sphere".into(),
        }
    }

    pub fn with_delay(mut self, delay: Duration) -> Self {
        self.delay = delay;
        self
    }

    pub fn with_metric_name(mut self, name: impl Into<String>) -> Self {
        self.metric = name.into();
        self
    }

    pub fn metric_name(&self) -> &str {
        &self.metric
    }

    /// Squared distance to the optimum in normalized coordinates.
    pub fn objective(&self, values: &[f64]) -> f64 {
        values
            .iter()
            .zip(self.optimum.iter().zip(self.lb.iter().zip(&self.ub)))
            .map(|(&x, (&opt, (&lo, &hi)))| {
                let d = (x - opt) / (hi - lo);
                d * d
            })
            .sum()
    }
}

impl Evaluator for SphereEvaluator {
    fn evaluate(&self, args: &ArgumentVector, _seed: u64) -> Result<SimResult, EvalError> {
        if args.len() != self.optimum.len() {
            return Err(EvalError::Config(format!(
                "argument vector has {} values, benchmark has {} dimensions",
                args.len(),
                self.optimum.len()
            )));
        }
        if !self.delay.is_zero() {
            // Busy wait so the stand-in is CPU-bound like a real simulator.
            let end = Instant::now() + self.delay;
            while Instant::now() < end {
                std::hint::spin_loop();
            }
        }
        Ok(SimResult::new().with_value(self.metric.clone(), self.objective(args.values())))
    }
}
