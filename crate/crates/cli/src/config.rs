//! Run configuration: a TOML document declaring the parameter space, the
//! objectives and constraints, the algorithm, the evaluator backing the run,
//! and the warm-start/concurrency settings. Numeric fields accept
//! unit-suffixed strings ("25 MB", "600 s"); everything is normalized to
//! base SI units (bytes, seconds, bits/second) at load time.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use simopt_core::bridge::ExternalSimSpec;
use simopt_core::chainsim::{NetworkModel, SimConfig};
use simopt_core::optimizer::{Algorithm, OptimizerConfig};
use simopt_core::param::{
    Constraint, ConstraintSense, Direction, ObjectiveSet, ObjectiveSpec, ParameterSpace,
    ParameterSpec,
};

use crate::CliError;

/// A number or a unit-suffixed string like "50 MB" or "600 s".
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Quantity {
    Number(f64),
    Text(String),
}

impl Quantity {
    pub fn resolve(&self) -> Result<f64, String> {
        match self {
            Quantity::Number(v) => Ok(*v),
            Quantity::Text(s) => parse_quantity(s),
        }
    }
}

/// Parse "25 MB", "1.5s", "600", "10 kbps" into base units. KB/MB/GB are
/// decimal (10^3 / 10^6 / 10^9 bytes).
pub fn parse_quantity(input: &str) -> Result<f64, String> {
    let s = input.trim();
    if s.is_empty() {
        return Err("empty quantity".into());
    }
    let split = s
        .char_indices()
        .find(|(_, c)| c.is_alphabetic())
        .map(|(i, _)| i)
        .unwrap_or(s.len());
    let (num_part, unit_part) = s.split_at(split);
    let value: f64 = num_part
        .trim()
        .parse()
        .map_err(|_| format!("`{input}` has no parseable number"))?;
    let scale = match unit_part.trim().to_ascii_lowercase().as_str() {
        "" => 1.0,
        "b" => 1.0,
        "kb" => 1e3,
        "mb" => 1e6,
        "gb" => 1e9,
        "s" => 1.0,
        "ms" => 1e-3,
        "min" => 60.0,
        "h" => 3600.0,
        "bps" => 1.0,
        "kbps" => 1e3,
        "mbps" => 1e6,
        "gbps" => 1e9,
        other => return Err(format!("`{input}` has unknown unit `{other}`")),
    };
    Ok(value * scale)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterEntry {
    pub name: String,
    #[serde(default)]
    pub unit: Option<String>,
    pub role: String,
    #[serde(default)]
    pub min: Option<Quantity>,
    #[serde(default)]
    pub max: Option<Quantity>,
    #[serde(default)]
    pub value: Option<Quantity>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveEntry {
    pub name: String,
    #[serde(default = "default_weight")]
    pub weight: f64,
    #[serde(default = "default_true")]
    pub active: bool,
    pub direction: String,
}

fn default_weight() -> f64 {
    1.0
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintEntry {
    pub objective: String,
    pub bound: f64,
    pub sense: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    pub algorithm: String,
    #[serde(default)]
    pub population: Option<usize>,
    #[serde(default)]
    pub max_iter: Option<usize>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub ga_mutation_prob: Option<f64>,
    #[serde(default)]
    pub ga_crossover_rate: Option<f64>,
    #[serde(default)]
    pub de_scale_factor: Option<f64>,
    #[serde(default)]
    pub de_crossover_rate: Option<f64>,
    #[serde(default)]
    pub pso_inertia: Option<f64>,
    #[serde(default)]
    pub pso_cognitive: Option<f64>,
    #[serde(default)]
    pub pso_social: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluatorSection {
    pub kind: String,
    #[serde(default)]
    pub replicates: Option<usize>,
    #[serde(default)]
    pub common_seeds: Option<bool>,
    #[serde(default)]
    pub network: Option<PathBuf>,
    #[serde(default)]
    pub executable: Option<PathBuf>,
    #[serde(default)]
    pub args: Option<Vec<String>>,
    #[serde(default)]
    pub timeout_s: Option<f64>,
    #[serde(default)]
    pub metrics: Option<Vec<String>>,
    #[serde(default)]
    pub optimum: Option<Vec<f64>>,
    #[serde(default)]
    pub delay_ms: Option<f64>,
    #[serde(default)]
    pub metric: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WarmstartSection {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default)]
    pub db: Option<PathBuf>,
    #[serde(default)]
    pub top_n: Option<usize>,
    #[serde(default)]
    pub strict_coverage: bool,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CmpSection {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    /// Resource-sampling interval for ACRU, milliseconds.
    #[serde(default)]
    pub resource_sample_ms: Option<u64>,
    #[serde(default, rename = "parameter")]
    pub parameters: Vec<ParameterEntry>,
    #[serde(default, rename = "objective")]
    pub objectives: Vec<ObjectiveEntry>,
    #[serde(default, rename = "constraint")]
    pub constraints: Vec<ConstraintEntry>,
    pub optimizer: OptimizerSection,
    pub evaluator: EvaluatorSection,
    #[serde(default)]
    pub warmstart: WarmstartSection,
    #[serde(default)]
    pub cmp: CmpSection,
}

/// Which simulator backs the run's evaluations.
#[derive(Debug, Clone)]
pub enum EvaluatorKind {
    ChainSim {
        base: SimConfig,
        replicates: usize,
        common_seeds: bool,
    },
    External(ExternalSimSpec),
    Surrogate {
        optimum: Vec<f64>,
        delay: Duration,
        metric: String,
    },
}

#[derive(Debug, Clone)]
pub struct WarmstartSettings {
    pub enabled: bool,
    pub db: Option<PathBuf>,
    pub top_n: usize,
    pub strict_coverage: bool,
}

/// Fully validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub resource_sample: Duration,
    pub space: ParameterSpace,
    pub objectives: ObjectiveSet,
    pub optimizer: OptimizerConfig,
    pub evaluator: EvaluatorKind,
    pub warmstart: WarmstartSettings,
    pub cmp_enabled: bool,
    pub workers: usize,
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub warmstart_db: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

pub fn load_run_config(path: &Path, overrides: &Overrides) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let file: RunConfigFile = toml::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    resolve(file, overrides)
}

pub fn resolve(file: RunConfigFile, overrides: &Overrides) -> Result<RunConfig, CliError> {
    let mut errors: Vec<String> = Vec::new();

    // Parameter space.
    let mut params = Vec::new();
    for (i, p) in file.parameters.iter().enumerate() {
        let at = |field: &str| format!("parameter[{i}].{field}");
        let unit = p.unit.clone().unwrap_or_default();
        match p.role.as_str() {
            "optimization" => {
                if p.value.is_some() {
                    errors.push(format!("{}: optimization parameters take min/max, not value", at("value")));
                }
                let lo = p.min.as_ref().map(|q| q.resolve());
                let hi = p.max.as_ref().map(|q| q.resolve());
                match (lo, hi) {
                    (Some(Ok(lo)), Some(Ok(hi))) => {
                        match ParameterSpec::optimization(&p.name, &unit, lo, hi) {
                            Ok(spec) => params.push(spec),
                            Err(e) => errors.push(format!("parameter[{i}]: {e}")),
                        }
                    }
                    (None, _) | (_, None) => {
                        errors.push(format!("{}: optimization parameters need min and max", at("min")))
                    }
                    (Some(Err(e)), _) => errors.push(format!("{}: {e}", at("min"))),
                    (_, Some(Err(e))) => errors.push(format!("{}: {e}", at("max"))),
                }
            }
            "fixed" => {
                if p.min.is_some() || p.max.is_some() {
                    errors.push(format!("{}: fixed parameters take value, not min/max", at("min")));
                }
                match p.value.as_ref().map(|q| q.resolve()) {
                    Some(Ok(v)) => match ParameterSpec::fixed(&p.name, &unit, v) {
                        Ok(spec) => params.push(spec),
                        Err(e) => errors.push(format!("parameter[{i}]: {e}")),
                    },
                    Some(Err(e)) => errors.push(format!("{}: {e}", at("value"))),
                    None => errors.push(format!("{}: fixed parameters need a value", at("value"))),
                }
            }
            other => errors.push(format!(
                "{}: role `{other}` must be `optimization` or `fixed`",
                at("role")
            )),
        }
    }
    let space = match ParameterSpace::new(params) {
        Ok(s) => s,
        Err(e) => {
            errors.push(e.to_string());
            ParameterSpace::new(vec![]).expect("empty space constructs")
        }
    };
    if space.optimization_count() == 0 {
        errors.push("parameter: at least one optimization parameter is required".into());
    }

    // Objectives and constraints.
    let mut objective_specs = Vec::new();
    for (i, o) in file.objectives.iter().enumerate() {
        let direction = match o.direction.as_str() {
            "minimize" => Some(Direction::Minimize),
            "maximize" => Some(Direction::Maximize),
            other => {
                errors.push(format!(
                    "objective[{i}].direction: `{other}` must be `minimize` or `maximize`"
                ));
                None
            }
        };
        if let Some(direction) = direction {
            match ObjectiveSpec::new(&o.name, o.weight, o.active, direction) {
                Ok(spec) => objective_specs.push(spec),
                Err(e) => errors.push(format!("objective[{i}]: {e}")),
            }
        }
    }
    let mut constraint_specs = Vec::new();
    for (i, c) in file.constraints.iter().enumerate() {
        let sense = match c.sense.as_str() {
            "upper" => Some(ConstraintSense::UpperBound),
            "lower" => Some(ConstraintSense::LowerBound),
            other => {
                errors.push(format!(
                    "constraint[{i}].sense: `{other}` must be `upper` or `lower`"
                ));
                None
            }
        };
        if !c.bound.is_finite() {
            errors.push(format!("constraint[{i}].bound: must be finite"));
        }
        if let Some(sense) = sense {
            constraint_specs.push(Constraint {
                objective: c.objective.clone(),
                bound: c.bound,
                sense,
            });
        }
    }
    let objectives = match ObjectiveSet::new(objective_specs, constraint_specs) {
        Ok(o) => o,
        Err(e) => {
            errors.push(e.to_string());
            ObjectiveSet::new(vec![], vec![]).expect("empty set constructs")
        }
    };
    if objectives.active_count() == 0 {
        errors.push("objective: at least one active objective is required".into());
    }

    // Optimizer.
    let algorithm = match file.optimizer.algorithm.as_str() {
        "ga" => Some(Algorithm::Ga),
        "de" => Some(Algorithm::De),
        "pso" => Some(Algorithm::Pso),
        other => {
            errors.push(format!(
                "optimizer.algorithm: `{other}` must be one of ga, de, pso"
            ));
            None
        }
    };
    let seed = overrides.seed.or(file.seed).unwrap_or(0);
    let optimizer = algorithm.map(|algorithm| {
        let mut cfg = if space.optimization_count() > 0 {
            OptimizerConfig::for_space(algorithm, &space)
        } else {
            OptimizerConfig::new(algorithm, vec![0.0], vec![1.0])
        };
        cfg.seed = seed;
        let o = &file.optimizer;
        if let Some(v) = o.population {
            cfg.population_size = v;
        }
        if let Some(v) = o.max_iter {
            cfg.max_iter = v;
        }
        if let Some(v) = o.epsilon {
            cfg.convergence_epsilon = v;
        }
        if let Some(v) = o.ga_mutation_prob {
            cfg.ga_mutation_prob = v;
        }
        if let Some(v) = o.ga_crossover_rate {
            cfg.ga_crossover_rate = v;
        }
        if let Some(v) = o.de_scale_factor {
            cfg.de_scale_factor = v;
        }
        if let Some(v) = o.de_crossover_rate {
            cfg.de_crossover_rate = v;
        }
        if let Some(v) = o.pso_inertia {
            cfg.pso_inertia = v;
        }
        if let Some(v) = o.pso_cognitive {
            cfg.pso_cognitive = v;
        }
        if let Some(v) = o.pso_social {
            cfg.pso_social = v;
        }
        cfg
    });
    if let Some(cfg) = &optimizer {
        if let Err(e) = cfg.validate() {
            errors.push(format!("optimizer: {e}"));
        }
    }

    // Evaluator.
    let ev = &file.evaluator;
    let evaluator = match ev.kind.as_str() {
        "chain-sim" => {
            let mut base = SimConfig::default();
            if let Some(net_path) = &ev.network {
                match load_network(net_path) {
                    Ok(net) => base.network = net,
                    Err(e) => errors.push(format!("evaluator.network: {e}")),
                }
            }
            Some(EvaluatorKind::ChainSim {
                base,
                replicates: ev.replicates.unwrap_or(1).max(1),
                common_seeds: ev.common_seeds.unwrap_or(true),
            })
        }
        "external" => {
            let executable = ev.executable.clone();
            if executable.is_none() {
                errors.push("evaluator.executable: required for kind = \"external\"".into());
            }
            Some(EvaluatorKind::External(ExternalSimSpec {
                executable: executable.unwrap_or_default(),
                args: ev.args.clone().unwrap_or_default(),
                timeout_s: ev.timeout_s.unwrap_or(300.0),
                expected_metrics: ev.metrics.clone().unwrap_or_default(),
            }))
        }
        "surrogate" => {
            let (lb, ub) = space.bounds();
            let optimum = match &ev.optimum {
                Some(o) if o.len() == lb.len() => o.clone(),
                Some(o) => {
                    errors.push(format!(
                        "evaluator.optimum: has {} entries for {} optimization parameters",
                        o.len(),
                        lb.len()
                    ));
                    vec![]
                }
                None => lb.iter().zip(&ub).map(|(&lo, &hi)| 0.5 * (lo + hi)).collect(),
            };
            Some(EvaluatorKind::Surrogate {
                optimum,
                delay: Duration::from_secs_f64(ev.delay_ms.unwrap_or(0.0).max(0.0) / 1e3),
                metric: ev.metric.clone().unwrap_or_else(|| "sphere".into()),
            })
        }
        other => {
            errors.push(format!(
                "evaluator.kind: `{other}` must be one of chain-sim, external, surrogate"
            ));
            None
        }
    };

    // Warm start + concurrency.
    let db = overrides.warmstart_db.clone().or(file.warmstart.db.clone());
    if file.warmstart.enabled && db.is_none() {
        errors.push("warmstart.db: required when warm starting is enabled".into());
    }
    let warmstart = WarmstartSettings {
        enabled: file.warmstart.enabled,
        db,
        top_n: file
            .warmstart
            .top_n
            .unwrap_or_else(|| file.optimizer.population.unwrap_or(50)),
        strict_coverage: file.warmstart.strict_coverage,
    };
    let workers = overrides.workers.unwrap_or_else(|| {
        if file.cmp.enabled {
            file.cmp.workers.unwrap_or_else(|| {
                std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
            })
        } else {
            1
        }
    });
    if workers == 0 {
        errors.push("cmp.workers: must be at least 1".into());
    }
    let cmp_enabled = file.cmp.enabled || overrides.workers.is_some_and(|w| w > 1);

    if !errors.is_empty() {
        return Err(CliError::Validation(errors.join("\n")));
    }

    Ok(RunConfig {
        seed,
        out_dir: overrides
            .out
            .clone()
            .or(file.out_dir)
            .unwrap_or_else(|| PathBuf::from("runs/latest")),
        resource_sample: Duration::from_millis(file.resource_sample_ms.unwrap_or(1000).max(1)),
        space,
        objectives,
        optimizer: optimizer.expect("validated above"),
        evaluator: evaluator.expect("validated above"),
        warmstart,
        cmp_enabled,
        workers,
    })
}

pub fn load_network(path: &Path) -> Result<NetworkModel, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let net: NetworkModel = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    net.validate()
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    Ok(net)
}

/// Hash of everything that defines the optimization problem, excluding the
/// warm-start and concurrency toggles (and output paths). Ablation groups
/// must agree on this hash per algorithm.
pub fn effective_config_hash(cfg: &RunConfig) -> String {
    #[derive(Serialize)]
    struct HashInput<'a> {
        seed: u64,
        space: &'a ParameterSpace,
        objectives: &'a ObjectiveSet,
        optimizer: &'a OptimizerConfig,
        evaluator: String,
    }
    let evaluator = match &cfg.evaluator {
        EvaluatorKind::ChainSim {
            base,
            replicates,
            common_seeds,
        } => format!(
            "chain-sim:{}:{}:{}",
            serde_json::to_string(base).unwrap(),
            replicates,
            common_seeds
        ),
        EvaluatorKind::External(spec) => format!("external:{}", serde_json::to_string(spec).unwrap()),
        EvaluatorKind::Surrogate {
            optimum,
            delay,
            metric,
        } => format!("surrogate:{optimum:?}:{}:{metric}", delay.as_nanos()),
    };
    let input = HashInput {
        seed: cfg.seed,
        space: &cfg.space,
        objectives: &cfg.objectives,
        optimizer: &cfg.optimizer,
        evaluator,
    };
    let bytes = serde_json::to_vec(&input).expect("hash input serializes");
    let digest = Sha256::digest(&bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
