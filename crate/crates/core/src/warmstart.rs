//! Persistent store of previously good parameter configurations, plus the
//! interval-Jaccard ranking that picks which of them seed a new run.
//!
//! Records live in a line-delimited JSON file, one record per line, schema
//! versioned. Appends take an advisory file lock; reads work on a snapshot.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::os::unix::io::AsRawFd;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::param::{
    Candidate, Direction, Interval, ObjectiveSet, ParameterSpace, SimResult,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum WarmStartError {
    #[error("degenerate interval [{lo}, {hi}]")]
    DegenerateInterval { lo: f64, hi: f64 },
    #[error("warm-start store {path}: {source}")]
    Storage {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("record invalid: {0}")]
    InvalidRecord(String),
}

/// One stored solution: the objective signature it was optimized for, the
/// parameter values it reached, the ranges it searched, and what it achieved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarmStartRecord {
    pub version: u32,
    /// Sorted names of the objectives the originating run optimized.
    pub objective_signature: Vec<String>,
    pub param_values: BTreeMap<String, f64>,
    pub param_ranges: BTreeMap<String, Interval>,
    pub achieved: BTreeMap<String, f64>,
    /// Optimization direction per achieved objective; lets later dominance
    /// checks (pruning) read the stored values correctly.
    pub directions: BTreeMap<String, Direction>,
    pub run_id: String,
    pub timestamp_ms: u64,
}

impl WarmStartRecord {
    pub fn validate(&self) -> Result<(), WarmStartError> {
        if self.objective_signature.is_empty() {
            return Err(WarmStartError::InvalidRecord(
                "empty objective signature".into(),
            ));
        }
        if !self.objective_signature.windows(2).all(|w| w[0] <= w[1]) {
            return Err(WarmStartError::InvalidRecord(
                "objective signature must be sorted".into(),
            ));
        }
        for (name, range) in &self.param_ranges {
            if !range.is_proper() {
                return Err(WarmStartError::InvalidRecord(format!(
                    "range for `{name}` is degenerate"
                )));
            }
            if let Some(&v) = self.param_values.get(name) {
                if !range.contains(v) {
                    return Err(WarmStartError::InvalidRecord(format!(
                        "value {v} for `{name}` lies outside its stored range"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Jaccard similarity of two closed intervals: intersection length over
/// union length. Both intervals must be non-degenerate.
pub fn interval_jaccard(a: Interval, b: Interval) -> Result<f64, WarmStartError> {
    for iv in [a, b] {
        if !iv.is_proper() {
            return Err(WarmStartError::DegenerateInterval { lo: iv.lo, hi: iv.hi });
        }
    }
    let intersection = (a.hi.min(b.hi) - a.lo.max(b.lo)).max(0.0);
    // For two intervals len(a) + len(b) - len(intersection) equals the union
    // measure whether they overlap or not.
    let union = a.len() + b.len() - intersection;
    Ok(intersection / union)
}

/// Mean interval Jaccard over the space's optimization parameters. Fixed
/// parameters contribute nothing; a record that does not cover every
/// optimization parameter scores 0.
pub fn config_similarity(space: &ParameterSpace, record: &WarmStartRecord) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for p in space.optimization_params() {
        let current = p.range().expect("optimization parameter has a range");
        let Some(&stored) = record.param_ranges.get(p.name()) else {
            return 0.0;
        };
        match interval_jaccard(current, stored) {
            Ok(js) => {
                sum += js;
                count += 1;
            }
            Err(_) => return 0.0,
        }
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// A record together with its similarity to the current task.
#[derive(Debug, Clone)]
pub struct SimilarityScore<'a> {
    pub record: &'a WarmStartRecord,
    /// Position in the store snapshot, used as the final tie-break.
    pub index: usize,
    pub js: f64,
}

fn record_covers_space(space: &ParameterSpace, record: &WarmStartRecord) -> bool {
    space.optimization_params().all(|p| {
        let current = p.range().expect("optimization parameter has a range");
        record
            .param_ranges
            .get(p.name())
            .is_some_and(|stored| stored.lo <= current.lo && current.hi <= stored.hi)
    })
}

/// Rank the records that match the active-objective signature by descending
/// similarity; ties break by recency, then by stable store order. With
/// `strict_coverage`, only records whose stored ranges fully contain the
/// current ranges are considered.
pub fn rank_records<'a>(
    records: &'a [WarmStartRecord],
    objectives: &ObjectiveSet,
    space: &ParameterSpace,
    strict_coverage: bool,
) -> Vec<SimilarityScore<'a>> {
    let signature = objectives.signature();
    let mut scored: Vec<SimilarityScore<'a>> = records
        .iter()
        .enumerate()
        .filter(|(_, r)| r.objective_signature == signature)
        .filter(|(_, r)| {
            space
                .optimization_params()
                .all(|p| r.param_values.contains_key(p.name()))
        })
        .filter(|(_, r)| !strict_coverage || record_covers_space(space, r))
        .map(|(index, record)| SimilarityScore {
            record,
            index,
            js: config_similarity(space, record),
        })
        .collect();
    scored.sort_by(|a, b| {
        b.js.partial_cmp(&a.js)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(b.record.timestamp_ms.cmp(&a.record.timestamp_ms))
            .then(a.index.cmp(&b.index))
    });
    scored
}

/// The top `n` stored configurations as candidates for the current space,
/// clamped into the current ranges. Returns fewer than `n` when the store is
/// smaller; an empty result means the caller falls back to random
/// initialization.
pub fn select_warm_starts(
    records: &[WarmStartRecord],
    objectives: &ObjectiveSet,
    space: &ParameterSpace,
    n: usize,
    strict_coverage: bool,
) -> Vec<Candidate> {
    rank_records(records, objectives, space, strict_coverage)
        .into_iter()
        .take(n)
        .map(|score| {
            let values = space
                .optimization_params()
                .map(|p| score.record.param_values[p.name()])
                .collect();
            Candidate::new(values, space).expect("coverage filtered above")
        })
        .collect()
}

/// True when `a` is at least as good as `b` on every active objective and
/// strictly better on at least one, honoring each objective's direction.
pub fn dominates(
    a: &BTreeMap<String, f64>,
    b: &BTreeMap<String, f64>,
    objectives: &ObjectiveSet,
) -> bool {
    let mut strictly_better = false;
    for o in objectives.active() {
        let (Some(&va), Some(&vb)) = (a.get(&o.name), b.get(&o.name)) else {
            return false;
        };
        let (better, worse) = match o.direction {
            Direction::Minimize => (va < vb, va > vb),
            Direction::Maximize => (va > vb, va < vb),
        };
        if worse {
            return false;
        }
        if better {
            strictly_better = true;
        }
    }
    strictly_better
}

/// Indices of the non-dominated entries in raw objective space.
pub fn non_dominated_indices(
    achieved: &[BTreeMap<String, f64>],
    objectives: &ObjectiveSet,
) -> Vec<usize> {
    (0..achieved.len())
        .filter(|&i| {
            !achieved
                .iter()
                .enumerate()
                .any(|(j, other)| j != i && dominates(other, &achieved[i], objectives))
        })
        .collect()
}

/// Build the records for the non-dominated final candidates of a finished
/// run. `finals` pairs each candidate with its measured result; candidates
/// whose evaluation failed are skipped.
pub fn records_from_run(
    space: &ParameterSpace,
    objectives: &ObjectiveSet,
    finals: &[(Candidate, Option<SimResult>)],
    run_id: &str,
    timestamp_ms: u64,
) -> Vec<WarmStartRecord> {
    let evaluated: Vec<(&Candidate, &SimResult)> = finals
        .iter()
        .filter_map(|(c, r)| r.as_ref().map(|r| (c, r)))
        .collect();
    let achieved: Vec<BTreeMap<String, f64>> = evaluated
        .iter()
        .map(|(_, r)| {
            objectives
                .active()
                .filter_map(|o| r.value(&o.name).map(|v| (o.name.clone(), v)))
                .collect()
        })
        .collect();

    let signature = objectives.signature();
    let directions: BTreeMap<String, Direction> = objectives
        .active()
        .map(|o| (o.name.clone(), o.direction))
        .collect();
    let ranges: BTreeMap<String, Interval> = space
        .optimization_params()
        .map(|p| (p.name().to_string(), p.range().expect("has range")))
        .collect();

    non_dominated_indices(&achieved, objectives)
        .into_iter()
        .map(|i| {
            let (candidate, _) = evaluated[i];
            let param_values: BTreeMap<String, f64> = space
                .params()
                .iter()
                .zip(
                    crate::param::assemble_arguments(candidate, space)
                        .expect("final candidates fit the space")
                        .values(),
                )
                .map(|(p, &v)| (p.name().to_string(), v))
                .collect();
            WarmStartRecord {
                version: SCHEMA_VERSION,
                objective_signature: signature.clone(),
                param_values,
                param_ranges: ranges.clone(),
                achieved: achieved[i].clone(),
                directions: directions.clone(),
                run_id: run_id.to_string(),
                timestamp_ms,
            }
        })
        .collect()
}

/// Drop every record strictly dominated by another record with the same
/// objective signature.
pub fn prune_dominated(records: &[WarmStartRecord]) -> Vec<WarmStartRecord> {
    records
        .iter()
        .filter(|r| {
            !records.iter().any(|other| {
                !std::ptr::eq(*r, other)
                    && other.objective_signature == r.objective_signature
                    && dominates_record(other, r)
            })
        })
        .cloned()
        .collect()
}

fn dominates_record(a: &WarmStartRecord, b: &WarmStartRecord) -> bool {
    let mut strictly_better = false;
    for name in &a.objective_signature {
        let (Some(&va), Some(&vb)) = (a.achieved.get(name), b.achieved.get(name)) else {
            return false;
        };
        let dir = a.directions.get(name).copied().unwrap_or(Direction::Minimize);
        let (better, worse) = match dir {
            Direction::Minimize => (va < vb, va > vb),
            Direction::Maximize => (va > vb, va < vb),
        };
        if worse {
            return false;
        }
        if better {
            strictly_better = true;
        }
    }
    strictly_better
}

/// Line-delimited record store. Reads tolerate corrupt lines (skipped and
/// counted); appends are serialized through an advisory file lock.
#[derive(Debug, Clone)]
pub struct WarmStartStore {
    path: PathBuf,
}

impl WarmStartStore {
    pub fn open(path: impl Into<PathBuf>) -> Self {
        WarmStartStore { path: path.into() }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn io_err(&self, source: std::io::Error) -> WarmStartError {
        WarmStartError::Storage {
            path: self.path.clone(),
            source,
        }
    }

    /// Snapshot of all valid records plus the number of skipped lines.
    /// A missing file is an empty store.
    pub fn load(&self) -> Result<(Vec<WarmStartRecord>, usize), WarmStartError> {
        let content = match fs::read_to_string(&self.path) {
            Ok(c) => c,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Ok((Vec::new(), 0))
            }
            Err(e) => return Err(self.io_err(e)),
        };
        let mut records = Vec::new();
        let mut skipped = 0usize;
        for line in content.lines() {
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<WarmStartRecord>(line) {
                Ok(r) if r.validate().is_ok() => records.push(r),
                _ => skipped += 1,
            }
        }
        Ok((records, skipped))
    }

    /// Append records, one JSON line each.
    pub fn append(&self, records: &[WarmStartRecord]) -> Result<(), WarmStartError> {
        if records.is_empty() {
            return Ok(());
        }
        if let Some(dir) = self.path.parent() {
            if !dir.as_os_str().is_empty() {
                fs::create_dir_all(dir).map_err(|e| self.io_err(e))?;
            }
        }
        let mut file = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(|e| self.io_err(e))?;
        flock_exclusive(&file).map_err(|e| self.io_err(e))?;
        let mut buf = String::new();
        for r in records {
            buf.push_str(&serde_json::to_string(r).expect("record serializes"));
            buf.push('\n');
        }
        file.write_all(buf.as_bytes()).map_err(|e| self.io_err(e))?;
        file.flush().map_err(|e| self.io_err(e))
        // flock released when the handle drops.
    }

    /// Replace the whole store (used by pruning).
    pub fn rewrite(&self, records: &[WarmStartRecord]) -> Result<(), WarmStartError> {
        let file = fs::OpenOptions::new()
            .create(true)
            .write(true)
            .open(&self.path)
            .map_err(|e| self.io_err(e))?;
        flock_exclusive(&file).map_err(|e| self.io_err(e))?;
        file.set_len(0).map_err(|e| self.io_err(e))?;
        let mut buf = String::new();
        for r in records {
            buf.push_str(&serde_json::to_string(r).expect("record serializes"));
            buf.push('\n');
        }
        let mut file = file;
        file.write_all(buf.as_bytes()).map_err(|e| self.io_err(e))?;
        file.flush().map_err(|e| self.io_err(e))
    }
}

fn flock_exclusive(file: &fs::File) -> std::io::Result<()> {
    let rc = unsafe { libc::flock(file.as_raw_fd(), libc::LOCK_EX) };
    if rc == 0 {
        Ok(())
    } else {
        Err(std::io::Error::last_os_error())
    }
}
