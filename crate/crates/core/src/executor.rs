//! Concurrent batch evaluation of a population's candidates, plus CPU
//! utilization sampling for the run-level resource report.
//!
//! The batch API is the framework's only concurrency boundary: callers stay
//! single-threaded, workers share nothing mutable, and results are gathered
//! back into candidate order.

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, OnceLock};
use std::thread;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::bridge::{EvalError, Evaluator};
use crate::param::{ArgumentVector, SimResult};

#[derive(Debug, Error)]
pub enum ExecutorError {
    #[error("worker pool: {0}")]
    WorkerPool(String),
    #[error("batch has no candidates")]
    EmptyBatch,
}

/// One iteration's worth of evaluations.
#[derive(Debug, Clone)]
pub struct BatchRequest {
    pub candidates: Vec<ArgumentVector>,
    pub base_seed: u64,
    pub worker_count: usize,
}

/// Seed for candidate `index` of a batch. XOR with the index keeps every
/// candidate's stream independent of worker count and batch composition.
pub fn candidate_seed(base_seed: u64, index: usize) -> u64 {
    base_seed ^ index as u64
}

pub type EvalOutcome = Result<SimResult, EvalError>;

/// Evaluate every candidate exactly once with its derived seed. Results come
/// back in candidate order regardless of completion order; per-candidate
/// failures are captured without aborting the batch.
pub fn evaluate_batch<E: Evaluator + ?Sized>(
    request: &BatchRequest,
    evaluator: &E,
) -> Result<Vec<EvalOutcome>, ExecutorError> {
    if request.candidates.is_empty() {
        return Err(ExecutorError::EmptyBatch);
    }
    if request.worker_count == 0 {
        return Err(ExecutorError::WorkerPool("worker_count must be >= 1".into()));
    }

    let n = request.candidates.len();
    if request.worker_count == 1 {
        return Ok((0..n)
            .map(|i| evaluator.evaluate(&request.candidates[i], candidate_seed(request.base_seed, i)))
            .collect());
    }

    let slots: Vec<OnceLock<EvalOutcome>> = (0..n).map(|_| OnceLock::new()).collect();
    let next = AtomicUsize::new(0);
    let workers = request.worker_count.min(n);

    thread::scope(|scope| -> Result<(), ExecutorError> {
        let mut handles = Vec::with_capacity(workers);
        for w in 0..workers {
            let handle = thread::Builder::new()
                .name(format!("eval-worker-{w}"))
                .spawn_scoped(scope, || loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= n {
                        break;
                    }
                    let outcome = evaluator
                        .evaluate(&request.candidates[i], candidate_seed(request.base_seed, i));
                    slots[i].set(outcome).ok().expect("each slot written once");
                })
                .map_err(|e| ExecutorError::WorkerPool(e.to_string()))?;
            handles.push(handle);
        }
        for h in handles {
            h.join()
                .map_err(|_| ExecutorError::WorkerPool("worker panicked".into()))?;
        }
        Ok(())
    })?;

    Ok(slots
        .into_iter()
        .map(|slot| slot.into_inner().expect("all slots filled"))
        .collect())
}

/// CPU utilization samples over a run. `acru` is the mean utilization as a
/// fraction of total machine capacity (all cores); `None` when the platform
/// gave us nothing to measure.
#[derive(Debug, Clone)]
pub struct ResourceTrace {
    /// (seconds since monitor start, utilization fraction in [0, 1]).
    pub samples: Vec<(f64, f64)>,
    pub acru: Option<f64>,
    pub cores: usize,
}

/// Cumulative CPU seconds of this process (and reaped children) from
/// /proc/self/stat. `None` off Linux or when the file is unreadable.
fn process_cpu_seconds() -> Option<f64> {
    let stat = std::fs::read_to_string("/proc/self/stat").ok()?;
    // comm can contain spaces; fields of interest follow the closing paren.
    let rest = &stat[stat.rfind(')')? + 2..];
    let fields: Vec<&str> = rest.split_whitespace().collect();
    // rest[0] is the state (overall field 3); utime..cstime are overall
    // fields 14..17.
    let ticks: f64 = [11usize, 12, 13, 14]
        .iter()
        .map(|&i| fields.get(i).and_then(|f| f.parse::<f64>().ok()).unwrap_or(0.0))
        .sum();
    let hz = unsafe { libc::sysconf(libc::_SC_CLK_TCK) };
    if hz <= 0 {
        return None;
    }
    Some(ticks / hz as f64)
}

/// Background sampler of process CPU utilization.
pub struct ResourceMonitor {
    stop: Arc<AtomicBool>,
    handle: thread::JoinHandle<Vec<(f64, f64)>>,
    cores: usize,
}

impl ResourceMonitor {
    /// Start sampling every `interval`. Sampling intervals must be positive.
    pub fn start(interval: Duration) -> ResourceMonitor {
        assert!(!interval.is_zero(), "sampling interval must be positive");
        let stop = Arc::new(AtomicBool::new(false));
        let stop_flag = Arc::clone(&stop);
        let cores = thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
        let handle = thread::spawn(move || {
            let start = Instant::now();
            let mut samples = Vec::new();
            let mut last_cpu = process_cpu_seconds();
            let mut last_t = 0.0f64;
            while !stop_flag.load(Ordering::Relaxed) {
                thread::sleep(interval);
                let t = start.elapsed().as_secs_f64();
                let cpu = process_cpu_seconds();
                if let (Some(prev), Some(cur)) = (last_cpu, cpu) {
                    let wall = t - last_t;
                    if wall > 0.0 {
                        let util = ((cur - prev) / (wall * cores as f64)).clamp(0.0, 1.0);
                        samples.push((t, util));
                    }
                }
                last_cpu = cpu;
                last_t = t;
            }
            samples
        });
        ResourceMonitor { stop, handle, cores }
    }

    /// Stop sampling and compute the average utilization. A zero-duration
    /// run yields no samples and an undefined average, never a fabricated
    /// one.
    pub fn stop(self) -> ResourceTrace {
        self.stop.store(true, Ordering::Relaxed);
        let samples = self.handle.join().unwrap_or_default();
        let acru = if samples.is_empty() {
            None
        } else {
            Some(samples.iter().map(|&(_, u)| u).sum::<f64>() / samples.len() as f64)
        };
        ResourceTrace {
            samples,
            acru,
            cores: self.cores,
        }
    }
}
