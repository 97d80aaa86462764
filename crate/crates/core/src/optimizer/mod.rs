//! GA, DE and PSO over candidate populations, with convergence detection and
//! deterministic seeding. One iteration = propose new positions, evaluate
//! them as a batch through the executor, fold the measurements into scalar
//! objective values, and update the population.

pub mod de;
pub mod ga;
pub mod pso;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bridge::Evaluator;
use crate::executor::{evaluate_batch, BatchRequest, ExecutorError};
use crate::param::{
    assemble_arguments, scalarize, Candidate, ObjectiveSet, ParamError, ParameterSpace, SimResult,
};
use crate::seeds;

pub use pso::{velocity_update, PsoState};

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error("invalid optimizer config: {0}")]
    InvalidConfig(String),
    #[error("7 - 5*omega vanishes at omega = {0}; the stability bound is undefined there")]
    StabilityDomain(f64),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Executor(#[from] ExecutorError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Ga,
    De,
    Pso,
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Algorithm::Ga => write!(f, "ga"),
            Algorithm::De => write!(f, "de"),
            Algorithm::Pso => write!(f, "pso"),
        }
    }
}

/// Algorithm settings. `new` fills the standard defaults: population 50,
/// 200 iterations for GA/DE and 150 for PSO, GA mutation probability 0.001,
/// DE scale factor 0.5 and crossover rate 0.3, PSO inertia 0.5 with both
/// attraction weights 0.8.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub algorithm: Algorithm,
    pub population_size: usize,
    pub max_iter: usize,
    pub lb: Vec<f64>,
    pub ub: Vec<f64>,
    pub ga_mutation_prob: f64,
    pub ga_crossover_rate: f64,
    pub de_scale_factor: f64,
    pub de_crossover_rate: f64,
    pub pso_inertia: f64,
    pub pso_cognitive: f64,
    pub pso_social: f64,
    /// Normalized population diameter below which the run counts as
    /// converged.
    pub convergence_epsilon: f64,
    pub seed: u64,
}

impl OptimizerConfig {
    pub fn new(algorithm: Algorithm, lb: Vec<f64>, ub: Vec<f64>) -> Self {
        OptimizerConfig {
            algorithm,
            population_size: 50,
            max_iter: match algorithm {
                Algorithm::Ga | Algorithm::De => 200,
                Algorithm::Pso => 150,
            },
            lb,
            ub,
            ga_mutation_prob: 0.001,
            ga_crossover_rate: 0.7,
            de_scale_factor: 0.5,
            de_crossover_rate: 0.3,
            pso_inertia: 0.5,
            pso_cognitive: 0.8,
            pso_social: 0.8,
            convergence_epsilon: 1e-6,
            seed: 0,
        }
    }

    /// Bounds taken from the space's optimization-parameter ranges.
    pub fn for_space(algorithm: Algorithm, space: &ParameterSpace) -> Self {
        let (lb, ub) = space.bounds();
        OptimizerConfig::new(algorithm, lb, ub)
    }

    pub fn dims(&self) -> usize {
        self.lb.len()
    }

    pub fn validate(&self) -> Result<(), OptimizerError> {
        let fail = |msg: String| Err(OptimizerError::InvalidConfig(msg));
        if self.lb.is_empty() {
            return fail("no optimization dimensions".into());
        }
        if self.lb.len() != self.ub.len() {
            return fail(format!(
                "lb has {} dims, ub has {}",
                self.lb.len(),
                self.ub.len()
            ));
        }
        for (d, (&lo, &hi)) in self.lb.iter().zip(&self.ub).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return fail(format!("bounds[{d}] = [{lo}, {hi}] must satisfy lo < hi"));
            }
        }
        if self.population_size < 2 {
            return fail("population_size must be at least 2".into());
        }
        if self.max_iter == 0 {
            return fail("max_iter must be positive".into());
        }
        if !(self.convergence_epsilon > 0.0) {
            return fail("convergence_epsilon must be positive".into());
        }
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                fail(format!("{name} = {v} must lie in [0, 1]"))
            }
        };
        unit("ga_mutation_prob", self.ga_mutation_prob)?;
        unit("ga_crossover_rate", self.ga_crossover_rate)?;
        unit("de_crossover_rate", self.de_crossover_rate)?;
        if !(self.de_scale_factor > 0.0) {
            return fail(format!(
                "de_scale_factor = {} must be positive",
                self.de_scale_factor
            ));
        }
        match self.algorithm {
            Algorithm::De if self.population_size < 4 => {
                fail("DE needs a population of at least 4 for three distinct donors".into())
            }
            Algorithm::Ga if self.population_size % 2 != 0 => {
                fail("GA needs an even population for pairing".into())
            }
            _ => Ok(()),
        }
    }
}

/// PSO convergence gate: true iff `c1 + c2 < 24 (1 - w^2) / (7 - 5 w)` with
/// the inertia weight inside (-1, 1); outside that interval the condition is
/// vacuously failed. The bound's denominator vanishes at w = 1.4, which is a
/// domain error rather than a verdict.
pub fn check_pso_stability(omega: f64, c1: f64, c2: f64) -> Result<bool, OptimizerError> {
    if (7.0 - 5.0 * omega).abs() < 1e-12 {
        return Err(OptimizerError::StabilityDomain(omega));
    }
    if !(-1.0 < omega && omega < 1.0) {
        return Ok(false);
    }
    Ok(c1 + c2 < 24.0 * (1.0 - omega * omega) / (7.0 - 5.0 * omega))
}

/// `lo + u * (hi - lo)`: the uniform initialization map all three algorithms
/// share.
pub fn lerp(lo: f64, hi: f64, u: f64) -> f64 {
    lo + u * (hi - lo)
}

/// Uniform random population within the bounds, one draw per dimension per
/// individual.
pub fn init_population(config: &OptimizerConfig, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    (0..config.population_size)
        .map(|_| {
            config
                .lb
                .iter()
                .zip(&config.ub)
                .map(|(&lo, &hi)| lerp(lo, hi, rng.gen::<f64>()))
                .collect()
        })
        .collect()
}

/// Normalized population diameter: the largest per-dimension spread divided
/// by that dimension's bound width.
pub fn population_diversity(positions: &[Vec<f64>], lb: &[f64], ub: &[f64]) -> f64 {
    let mut diameter = 0.0f64;
    for d in 0..lb.len() {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for p in positions {
            min = min.min(p[d]);
            max = max.max(p[d]);
        }
        diameter = diameter.max((max - min) / (ub[d] - lb[d]));
    }
    diameter
}

/// True when the whole population has collapsed to (numerically) one point.
pub fn has_converged(positions: &[Vec<f64>], epsilon: f64, lb: &[f64], ub: &[f64]) -> bool {
    population_diversity(positions, lb, ub) < epsilon
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub iteration: usize,
    pub best_u: f64,
    pub diversity: f64,
    /// Elapsed seconds at the end of the iteration. Kept in memory for the
    /// convergence-time report; deliberately not part of the trace file,
    /// which must be reproducible byte for byte.
    pub wall_clock_s: f64,
}

#[derive(Debug, Clone)]
pub struct FinalCandidate {
    pub candidate: Candidate,
    pub objective_u: f64,
    pub result: Option<SimResult>,
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub algorithm: Algorithm,
    pub converged: bool,
    pub iteration_of_convergence: Option<usize>,
    /// Seconds from optimizer start to the first iteration whose diversity
    /// fell below epsilon; total runtime when the run never converged.
    pub wall_time_to_convergence_s: f64,
    pub total_wall_time_s: f64,
    pub iterations_run: usize,
    pub best_candidate: Candidate,
    pub best_u: f64,
    pub best_result: Option<SimResult>,
    pub trace: Vec<IterationTrace>,
    pub final_population: Vec<FinalCandidate>,
    pub evaluations: usize,
    pub failures: usize,
}

struct EvalContext<'a> {
    space: &'a ParameterSpace,
    objectives: &'a ObjectiveSet,
    evaluator: &'a dyn Evaluator,
    workers: usize,
    run_seed: u64,
    evaluations: usize,
    failures: usize,
}

impl EvalContext<'_> {
    /// Evaluate a set of positions. A failing candidate gets the worst
    /// possible objective value and the run keeps going; external simulators
    /// crash in practice.
    fn evaluate(
        &mut self,
        iteration: usize,
        positions: &[Vec<f64>],
        lb: &[f64],
        ub: &[f64],
    ) -> Result<(Vec<f64>, Vec<Option<SimResult>>), OptimizerError> {
        let mut candidates = Vec::with_capacity(positions.len());
        for p in positions {
            let c = Candidate::clamped(p.clone(), lb, ub);
            candidates.push(assemble_arguments(&c, self.space)?);
        }
        let request = BatchRequest {
            candidates,
            base_seed: seeds::iteration_seed(self.run_seed, iteration as u64),
            worker_count: self.workers,
        };
        let outcomes = evaluate_batch(&request, self.evaluator)?;
        self.evaluations += outcomes.len();
        let mut us = Vec::with_capacity(outcomes.len());
        let mut results = Vec::with_capacity(outcomes.len());
        for outcome in outcomes {
            match outcome {
                Ok(r) => {
                    us.push(scalarize(&r, self.objectives)?);
                    results.push(Some(r));
                }
                Err(_) => {
                    self.failures += 1;
                    us.push(f64::INFINITY);
                    results.push(None);
                }
            }
        }
        Ok((us, results))
    }
}

/// Run the configured algorithm against the evaluator until the population
/// converges or the iteration budget runs out. Warm-start candidates, when
/// given, replace the head of the random initial population.
pub fn run(
    space: &ParameterSpace,
    objectives: &ObjectiveSet,
    evaluator: &dyn Evaluator,
    workers: usize,
    warm_start: &[Candidate],
    config: &OptimizerConfig,
) -> Result<ConvergenceReport, OptimizerError> {
    config.validate()?;
    if space.optimization_count() != config.dims() {
        return Err(OptimizerError::InvalidConfig(format!(
            "config has {} dims but the space has {} optimization parameters",
            config.dims(),
            space.optimization_count()
        )));
    }
    if objectives.active_count() == 0 {
        return Err(OptimizerError::InvalidConfig(
            "at least one active objective is required".into(),
        ));
    }
    if workers == 0 {
        return Err(OptimizerError::InvalidConfig("workers must be >= 1".into()));
    }

    let start = Instant::now();
    let lb = &config.lb;
    let ub = &config.ub;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut ctx = EvalContext {
        space,
        objectives,
        evaluator,
        workers,
        run_seed: config.seed,
        evaluations: 0,
        failures: 0,
    };

    // Random init first, then overwrite the head with warm starts: the RNG
    // stream (and thus the padding individuals) is identical whether or not
    // warm starts were found.
    let mut positions = init_population(config, &mut rng);
    for (slot, warm) in positions.iter_mut().zip(warm_start) {
        *slot = Candidate::clamped(warm.values().to_vec(), lb, ub)
            .values()
            .to_vec();
    }

    let (mut us, mut results) = ctx.evaluate(0, &positions, lb, ub)?;

    let mut best_u = f64::INFINITY;
    let mut best_candidate = Candidate::clamped(positions[0].clone(), lb, ub);
    let mut best_result: Option<SimResult> = None;
    let absorb_best = |positions: &[Vec<f64>],
                           us: &[f64],
                           results: &[Option<SimResult>],
                           best_u: &mut f64,
                           best_candidate: &mut Candidate,
                           best_result: &mut Option<SimResult>| {
        for ((p, &u), r) in positions.iter().zip(us).zip(results) {
            if u < *best_u {
                *best_u = u;
                *best_candidate = Candidate::clamped(p.clone(), lb, ub);
                *best_result = r.clone();
            }
        }
    };
    absorb_best(&positions, &us, &results, &mut best_u, &mut best_candidate, &mut best_result);

    let mut trace = Vec::new();
    let mut converged = false;
    let mut iteration_of_convergence = None;
    let mut toc = 0.0f64;
    let record = |iteration: usize,
                      positions: &[Vec<f64>],
                      best_u: f64,
                      trace: &mut Vec<IterationTrace>|
     -> bool {
        let diversity = population_diversity(positions, lb, ub);
        trace.push(IterationTrace {
            iteration,
            best_u,
            diversity,
            wall_clock_s: start.elapsed().as_secs_f64(),
        });
        diversity < config.convergence_epsilon
    };

    if record(0, &positions, best_u, &mut trace) {
        converged = true;
        iteration_of_convergence = Some(0);
        toc = start.elapsed().as_secs_f64();
    }

    let mut pso_state = match config.algorithm {
        Algorithm::Pso => Some(PsoState::new(positions.clone(), &us)),
        _ => None,
    };

    let mut iterations_run = 0usize;
    for iteration in 1..=config.max_iter {
        if converged {
            break;
        }
        iterations_run = iteration;
        match config.algorithm {
            Algorithm::Pso => {
                let state = pso_state.as_mut().expect("pso state initialized");
                state.step(config, &mut rng);
                let (new_us, new_results) = ctx.evaluate(iteration, &state.positions, lb, ub)?;
                state.update_bests(&new_us);
                positions = state.positions.clone();
                us = new_us;
                results = new_results;
            }
            Algorithm::De => {
                let trials = de::propose(&positions, config, &mut rng);
                let (trial_us, trial_results) = ctx.evaluate(iteration, &trials, lb, ub)?;
                for i in 0..positions.len() {
                    if trial_us[i] <= us[i] {
                        positions[i] = trials[i].clone();
                        us[i] = trial_us[i];
                        results[i] = trial_results[i].clone();
                    }
                }
            }
            Algorithm::Ga => {
                let (elite, offspring) = ga::propose(&positions, &us, config, &mut rng);
                let (child_us, child_results) = ctx.evaluate(iteration, &offspring, lb, ub)?;
                let elite_position = positions[elite].clone();
                let elite_u = us[elite];
                let elite_result = results[elite].clone();
                positions = std::iter::once(elite_position).chain(offspring).collect();
                us = std::iter::once(elite_u).chain(child_us).collect();
                results = std::iter::once(elite_result).chain(child_results).collect();
            }
        }

        absorb_best(&positions, &us, &results, &mut best_u, &mut best_candidate, &mut best_result);
        if record(iteration, &positions, best_u, &mut trace) {
            converged = true;
            iteration_of_convergence = Some(iteration);
            toc = start.elapsed().as_secs_f64();
        }
    }

    let total = start.elapsed().as_secs_f64();
    let final_population = positions
        .iter()
        .zip(&us)
        .zip(&results)
        .map(|((p, &u), r)| FinalCandidate {
            candidate: Candidate::clamped(p.clone(), lb, ub),
            objective_u: u,
            result: r.clone(),
        })
        .collect();

    Ok(ConvergenceReport {
        algorithm: config.algorithm,
        converged,
        iteration_of_convergence,
        wall_time_to_convergence_s: if converged { toc } else { total },
        total_wall_time_s: total,
        iterations_run,
        best_candidate,
        best_u,
        best_result,
        trace,
        final_population,
        evaluations: ctx.evaluations,
        failures: ctx.failures,
    })
}
