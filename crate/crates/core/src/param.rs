//! Parameter and objective vocabulary: which simulator inputs are varied by
//! the optimizer, which stay fixed, and how per-objective measurements are
//! folded into the single scalar the optimizers minimize.
//!
//! All values are carried in base SI units (seconds, bytes, bits/second).
//! Types here are immutable after construction and safe to share across
//! worker threads.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Additive penalty scale for violated hard constraints: each violated
/// constraint adds `1e6 * violation / |bound|` to the scalarized objective,
/// keeping it finite and comparable across candidates.
pub const CONSTRAINT_PENALTY: f64 = 1e6;

#[derive(Debug, Error)]
pub enum ParamError {
    #[error("parameter `{name}`: {reason}")]
    InvalidSpec { name: String, reason: String },
    #[error("parameter space: {0}")]
    InvalidSpace(String),
    #[error("objective `{name}`: {reason}")]
    InvalidObjective { name: String, reason: String },
    #[error("candidate supplies {got} values but the space has {expected} optimization parameters")]
    ShapeMismatch { got: usize, expected: usize },
    #[error("missing value for objective `{0}`")]
    MissingObjective(String),
}

/// Closed real interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    /// True when `lo < hi` and both ends are finite.
    pub fn is_proper(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.lo, self.hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ParamKind {
    Optimization { range: Interval },
    Fixed { value: f64 },
}

/// One simulator input: either varied by the optimizer within a range, or
/// pinned to a fixed value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSpec {
    name: String,
    unit: String,
    kind: ParamKind,
}

impl ParameterSpec {
    /// A parameter the optimizer varies within `[lo, hi]`.
    pub fn optimization(
        name: impl Into<String>,
        unit: impl Into<String>,
        lo: f64,
        hi: f64,
    ) -> Result<Self, ParamError> {
        let name = name.into();
        let range = Interval::new(lo, hi);
        if !range.is_proper() {
            return Err(ParamError::InvalidSpec {
                name,
                reason: format!("range [{lo}, {hi}] must satisfy lo < hi with finite ends"),
            });
        }
        Ok(ParameterSpec {
            name,
            unit: unit.into(),
            kind: ParamKind::Optimization { range },
        })
    }

    /// A parameter pinned to `value` for the whole study.
    pub fn fixed(
        name: impl Into<String>,
        unit: impl Into<String>,
        value: f64,
    ) -> Result<Self, ParamError> {
        let name = name.into();
        if !value.is_finite() {
            return Err(ParamError::InvalidSpec {
                name,
                reason: format!("fixed value {value} must be finite"),
            });
        }
        Ok(ParameterSpec {
            name,
            unit: unit.into(),
            kind: ParamKind::Fixed { value },
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn unit(&self) -> &str {
        &self.unit
    }

    /// 1 when the parameter is varied by the optimizer, 0 when fixed.
    pub fn indicator(&self) -> u8 {
        match self.kind {
            ParamKind::Optimization { .. } => 1,
            ParamKind::Fixed { .. } => 0,
        }
    }

    pub fn is_optimization(&self) -> bool {
        self.indicator() == 1
    }

    pub fn range(&self) -> Option<Interval> {
        match self.kind {
            ParamKind::Optimization { range } => Some(range),
            ParamKind::Fixed { .. } => None,
        }
    }

    pub fn fixed_value(&self) -> Option<f64> {
        match self.kind {
            ParamKind::Optimization { .. } => None,
            ParamKind::Fixed { value } => Some(value),
        }
    }
}

/// Ordered list of parameters. The order is canonical: argument vectors and
/// candidates use it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSpace {
    params: Vec<ParameterSpec>,
}

impl ParameterSpace {
    /// Names must be unique. Whether the space has at least one optimization
    /// parameter is checked when a run starts, not here, so all-fixed spaces
    /// remain expressible for argument assembly.
    pub fn new(params: Vec<ParameterSpec>) -> Result<Self, ParamError> {
        let mut seen = std::collections::BTreeSet::new();
        for p in &params {
            if !seen.insert(p.name.clone()) {
                return Err(ParamError::InvalidSpace(format!(
                    "duplicate parameter name `{}`",
                    p.name
                )));
            }
        }
        Ok(ParameterSpace { params })
    }

    pub fn params(&self) -> &[ParameterSpec] {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&ParameterSpec> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn optimization_params(&self) -> impl Iterator<Item = &ParameterSpec> {
        self.params.iter().filter(|p| p.is_optimization())
    }

    pub fn optimization_count(&self) -> usize {
        self.optimization_params().count()
    }

    /// Lower and upper bounds of the optimization parameters, in space order.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lb = Vec::new();
        let mut ub = Vec::new();
        for p in self.optimization_params() {
            let r = p.range().expect("optimization parameter has a range");
            lb.push(r.lo);
            ub.push(r.hi);
        }
        (lb, ub)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Minimize,
    Maximize,
}

/// One optimization objective. The scalarized objective is always minimized;
/// a `Maximize` objective contributes with its value negated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    pub name: String,
    pub weight: f64,
    pub active: bool,
    pub direction: Direction,
}

impl ObjectiveSpec {
    pub fn new(
        name: impl Into<String>,
        weight: f64,
        active: bool,
        direction: Direction,
    ) -> Result<Self, ParamError> {
        let name = name.into();
        if !(weight.is_finite() && weight > 0.0) {
            return Err(ParamError::InvalidObjective {
                name,
                reason: format!("weight {weight} must be a positive finite real"),
            });
        }
        Ok(ObjectiveSpec {
            name,
            weight,
            active,
            direction,
        })
    }

    /// The indicator of the objective within the active set.
    pub fn indicator(&self) -> u8 {
        self.active as u8
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintSense {
    /// Value must stay at or below the bound.
    UpperBound,
    /// Value must stay at or above the bound.
    LowerBound,
}

/// Hard constraint on a measured metric, folded into the scalar objective as
/// an additive penalty when violated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub objective: String,
    pub bound: f64,
    pub sense: ConstraintSense,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSet {
    objectives: Vec<ObjectiveSpec>,
    constraints: Vec<Constraint>,
}

impl ObjectiveSet {
    /// Names must be unique. "At least one active objective" is a run-level
    /// requirement checked by the drivers, which keeps degenerate sets
    /// constructible for the scalarization identities.
    pub fn new(
        objectives: Vec<ObjectiveSpec>,
        constraints: Vec<Constraint>,
    ) -> Result<Self, ParamError> {
        let mut seen = std::collections::BTreeSet::new();
        for o in &objectives {
            if !seen.insert(o.name.clone()) {
                return Err(ParamError::InvalidObjective {
                    name: o.name.clone(),
                    reason: "duplicate objective name".into(),
                });
            }
        }
        Ok(ObjectiveSet {
            objectives,
            constraints,
        })
    }

    pub fn objectives(&self) -> &[ObjectiveSpec] {
        &self.objectives
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn active(&self) -> impl Iterator<Item = &ObjectiveSpec> {
        self.objectives.iter().filter(|o| o.active)
    }

    pub fn active_count(&self) -> usize {
        self.active().count()
    }

    /// Sorted names of the active objectives. Warm-start records match on
    /// this signature.
    pub fn signature(&self) -> Vec<String> {
        let mut names: Vec<String> = self.active().map(|o| o.name.clone()).collect();
        names.sort();
        names
    }
}

/// Optimizer-proposed values for the optimization parameters, in space order.
/// Values are clamped into their ranges on construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    values: Vec<f64>,
}

impl Candidate {
    pub fn new(values: Vec<f64>, space: &ParameterSpace) -> Result<Self, ParamError> {
        let expected = space.optimization_count();
        if values.len() != expected {
            return Err(ParamError::ShapeMismatch {
                got: values.len(),
                expected,
            });
        }
        let clamped = space
            .optimization_params()
            .zip(values)
            .map(|(p, v)| p.range().expect("optimization parameter has a range").clamp(v))
            .collect();
        Ok(Candidate { values: clamped })
    }

    /// Construct from raw per-dimension bounds, clamping each value.
    /// `values`, `lb` and `ub` must have equal lengths.
    pub fn clamped(values: Vec<f64>, lb: &[f64], ub: &[f64]) -> Self {
        assert_eq!(values.len(), lb.len());
        assert_eq!(values.len(), ub.len());
        let values = values
            .into_iter()
            .zip(lb.iter().zip(ub))
            .map(|(v, (&lo, &hi))| v.clamp(lo, hi))
            .collect();
        Candidate { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Full simulator input: one value per parameter of the space, in space
/// order. Built only by [`assemble_arguments`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArgumentVector {
    values: Vec<f64>,
}

impl ArgumentVector {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Combine optimizer-proposed values with fixed values into the full
/// argument vector: each slot takes the candidate value when the parameter's
/// indicator is 1 and the fixed value when it is 0.
pub fn assemble_arguments(
    candidate: &Candidate,
    space: &ParameterSpace,
) -> Result<ArgumentVector, ParamError> {
    let expected = space.optimization_count();
    if candidate.values.len() != expected {
        return Err(ParamError::ShapeMismatch {
            got: candidate.values.len(),
            expected,
        });
    }
    let mut next = candidate.values.iter();
    let values = space
        .params()
        .iter()
        .map(|p| match p.fixed_value() {
            Some(f) => f,
            None => *next.next().expect("counted above"),
        })
        .collect();
    Ok(ArgumentVector { values })
}

/// Per-objective measured values from one simulation, plus free-form
/// diagnostics (propagation times and the like).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub values: BTreeMap<String, f64>,
    pub diagnostics: BTreeMap<String, f64>,
}

impl SimResult {
    pub fn new() -> Self {
        SimResult::default()
    }

    pub fn with_value(mut self, name: impl Into<String>, value: f64) -> Self {
        self.values.insert(name.into(), value);
        self
    }

    pub fn with_diagnostic(mut self, name: impl Into<String>, value: f64) -> Self {
        self.diagnostics.insert(name.into(), value);
        self
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }
}

/// Weighted scalarization of a simulation result:
/// `U = sum_j weight_j * signed(v_j) * indicator_j`, with `signed` the raw
/// value for `Minimize` objectives and its negation for `Maximize` ones, so
/// U is always minimized. Violated hard constraints add
/// `CONSTRAINT_PENALTY * violation / |bound|`.
pub fn scalarize(result: &SimResult, objectives: &ObjectiveSet) -> Result<f64, ParamError> {
    let mut u = 0.0;
    for o in objectives.active() {
        let v = result
            .value(&o.name)
            .ok_or_else(|| ParamError::MissingObjective(o.name.clone()))?;
        let signed = match o.direction {
            Direction::Minimize => v,
            Direction::Maximize => -v,
        };
        u += o.weight * signed;
    }
    for c in objectives.constraints() {
        let v = result
            .value(&c.objective)
            .ok_or_else(|| ParamError::MissingObjective(c.objective.clone()))?;
        let violation = match c.sense {
            ConstraintSense::UpperBound => v - c.bound,
            ConstraintSense::LowerBound => c.bound - v,
        };
        if violation > 0.0 {
            let scale = if c.bound.abs() > 0.0 { c.bound.abs() } else { 1.0 };
            u += CONSTRAINT_PENALTY * violation / scale;
        }
    }
    Ok(u)
}
