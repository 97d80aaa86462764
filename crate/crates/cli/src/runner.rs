//! The optimization driver: warm-start retrieval, the optimizer loop with
//! batched evaluation, resource sampling, artifact emission, and warm-start
//! recording.

use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use simopt_core::executor::{ResourceMonitor, ResourceTrace};
use simopt_core::optimizer::{self, ConvergenceReport};
use simopt_core::param::Candidate;
use simopt_core::warmstart::{records_from_run, select_warm_starts, WarmStartRecord, WarmStartStore};

use crate::config::RunConfig;
use crate::evaluators::build_evaluator;
use crate::reportio;
use crate::CliError;

pub struct RunOutcome {
    pub report: ConvergenceReport,
    pub resources: ResourceTrace,
    pub warm_candidates: Vec<Candidate>,
    pub appended: Vec<WarmStartRecord>,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// Run one optimization: select warm starts (when enabled), run the
/// configured algorithm with batched evaluation, sample resources
/// throughout, and optionally append the non-dominated finals to the store.
pub fn execute_run(cfg: &RunConfig, record_solutions: bool) -> Result<RunOutcome, CliError> {
    let evaluator = build_evaluator(cfg)?;

    let warm_candidates = match (&cfg.warmstart.enabled, &cfg.warmstart.db) {
        (true, Some(db)) => {
            let store = WarmStartStore::open(db);
            let (records, skipped) = store.load()?;
            if skipped > 0 {
                eprintln!("warning: skipped {skipped} corrupt warm-start record(s) in {}", db.display());
            }
            select_warm_starts(
                &records,
                &cfg.objectives,
                &cfg.space,
                cfg.warmstart.top_n,
                cfg.warmstart.strict_coverage,
            )
        }
        _ => Vec::new(),
    };

    let monitor = ResourceMonitor::start(cfg.resource_sample);
    let report = optimizer::run(
        &cfg.space,
        &cfg.objectives,
        evaluator.as_ref(),
        cfg.workers,
        &warm_candidates,
        &cfg.optimizer,
    )?;
    let resources = monitor.stop();

    let mut appended = Vec::new();
    if record_solutions {
        if let Some(db) = &cfg.warmstart.db {
            let finals: Vec<_> = report
                .final_population
                .iter()
                .map(|f| (f.candidate.clone(), f.result.clone()))
                .collect();
            let run_id = format!("{}-seed{}", cfg.optimizer.algorithm, cfg.seed);
            let records =
                records_from_run(&cfg.space, &cfg.objectives, &finals, &run_id, now_ms());
            let store = WarmStartStore::open(db);
            match store.append(&records) {
                Ok(()) => appended = records,
                // A failed store write must not lose the optimization result.
                Err(e) => eprintln!("warning: could not append warm-start records: {e}"),
            }
        }
    }

    Ok(RunOutcome {
        report,
        resources,
        warm_candidates,
        appended,
    })
}

/// `optimize` command: run and write `trace.csv`, `resources.csv`,
/// `report.txt` and `warmstart-appended.txt` into the output directory.
pub fn cmd_optimize(cfg: &RunConfig) -> Result<(RunOutcome, PathBuf), CliError> {
    std::fs::create_dir_all(&cfg.out_dir)?;
    let outcome = execute_run(cfg, true)?;

    reportio::write_trace_csv(&cfg.out_dir.join("trace.csv"), &outcome.report.trace)?;
    reportio::write_resources_csv(&cfg.out_dir.join("resources.csv"), &outcome.resources)?;
    let report_text = reportio::render_report(
        &outcome.report,
        &outcome.resources,
        &cfg.space,
        cfg.seed,
        cfg.workers,
        outcome.warm_candidates.len(),
        outcome.appended.len(),
    );
    std::fs::write(cfg.out_dir.join("report.txt"), report_text)?;
    let mut appended_lines = String::new();
    for r in &outcome.appended {
        appended_lines.push_str(&serde_json::to_string(r).expect("record serializes"));
        appended_lines.push('\n');
    }
    std::fs::write(cfg.out_dir.join("warmstart-appended.txt"), appended_lines)?;

    Ok((outcome, cfg.out_dir.clone()))
}
