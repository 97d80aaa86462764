//! Artifact writers and readers. Trace files carry only deterministic
//! columns so a fixed-seed run reproduces them byte for byte; timing lives
//! in the resource trace and the human report.

use std::fmt::Write as _;
use std::path::Path;

use simopt_core::executor::ResourceTrace;
use simopt_core::optimizer::{ConvergenceReport, IterationTrace};
use simopt_core::param::ParameterSpace;

use crate::CliError;

pub fn render_trace_csv(trace: &[IterationTrace]) -> String {
    let mut out = String::from("iteration,best_u,diversity\n");
    for row in trace {
        writeln!(out, "{},{},{}", row.iteration, row.best_u, row.diversity).unwrap();
    }
    out
}

pub fn write_trace_csv(path: &Path, trace: &[IterationTrace]) -> Result<(), CliError> {
    std::fs::write(path, render_trace_csv(trace))?;
    Ok(())
}

/// Parse a trace file back into (iteration, best_u, diversity) rows. Every
/// file the tool writes must load cleanly here.
pub fn read_trace_csv(path: &Path) -> Result<Vec<(usize, f64, f64)>, CliError> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 {
            if line != "iteration,best_u,diversity" {
                return Err(CliError::Runtime(format!(
                    "{}: unexpected trace header `{line}`",
                    path.display()
                )));
            }
            continue;
        }
        let mut fields = line.split(',');
        let parse_err = || CliError::Runtime(format!("{}: bad trace row `{line}`", path.display()));
        let iteration = fields
            .next()
            .and_then(|f| f.parse::<usize>().ok())
            .ok_or_else(parse_err)?;
        let best_u = fields
            .next()
            .and_then(|f| f.parse::<f64>().ok())
            .ok_or_else(parse_err)?;
        let diversity = fields
            .next()
            .and_then(|f| f.parse::<f64>().ok())
            .ok_or_else(parse_err)?;
        if fields.next().is_some() {
            return Err(parse_err());
        }
        rows.push((iteration, best_u, diversity));
    }
    Ok(rows)
}

pub fn render_resources_csv(trace: &ResourceTrace) -> String {
    let mut out = String::from("t_offset_s,cpu_fraction\n");
    for (t, u) in &trace.samples {
        writeln!(out, "{t},{u}").unwrap();
    }
    out
}

pub fn write_resources_csv(path: &Path, trace: &ResourceTrace) -> Result<(), CliError> {
    std::fs::write(path, render_resources_csv(trace))?;
    Ok(())
}

pub fn read_resources_csv(path: &Path) -> Result<Vec<(f64, f64)>, CliError> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 {
            if line != "t_offset_s,cpu_fraction" {
                return Err(CliError::Runtime(format!(
                    "{}: unexpected resources header `{line}`",
                    path.display()
                )));
            }
            continue;
        }
        let (t, u) = line
            .split_once(',')
            .ok_or_else(|| CliError::Runtime(format!("bad resources row `{line}`")))?;
        rows.push((
            t.parse::<f64>()
                .map_err(|e| CliError::Runtime(format!("bad resources row `{line}`: {e}")))?,
            u.parse::<f64>()
                .map_err(|e| CliError::Runtime(format!("bad resources row `{line}`: {e}")))?,
        ));
    }
    Ok(rows)
}

pub fn render_report(
    report: &ConvergenceReport,
    resources: &ResourceTrace,
    space: &ParameterSpace,
    seed: u64,
    workers: usize,
    warm_used: usize,
    records_appended: usize,
) -> String {
    let mut out = String::new();
    writeln!(out, "algorithm: {}", report.algorithm).unwrap();
    writeln!(out, "seed: {seed}").unwrap();
    writeln!(out, "workers: {workers}").unwrap();
    writeln!(out, "warm_start_candidates: {warm_used}").unwrap();
    writeln!(out, "converged: {}", report.converged).unwrap();
    match report.iteration_of_convergence {
        Some(it) => writeln!(out, "iteration_of_convergence: {it}").unwrap(),
        None => writeln!(out, "iteration_of_convergence: none").unwrap(),
    }
    writeln!(
        out,
        "time_to_convergence_s: {:.6}",
        report.wall_time_to_convergence_s
    )
    .unwrap();
    writeln!(out, "total_wall_time_s: {:.6}", report.total_wall_time_s).unwrap();
    writeln!(out, "iterations_run: {}", report.iterations_run).unwrap();
    writeln!(out, "evaluations: {}", report.evaluations).unwrap();
    writeln!(out, "failures: {}", report.failures).unwrap();
    writeln!(out, "best_u: {}", report.best_u).unwrap();
    let mut values = report.best_candidate.values().iter();
    for p in space.optimization_params() {
        writeln!(out, "best.{}: {}", p.name(), values.next().unwrap()).unwrap();
    }
    if let Some(result) = &report.best_result {
        for (name, v) in &result.values {
            writeln!(out, "best_metric.{name}: {v}").unwrap();
        }
        for (name, v) in &result.diagnostics {
            writeln!(out, "best_diag.{name}: {v}").unwrap();
        }
    }
    match resources.acru {
        Some(acru) => writeln!(
            out,
            "acru: {:.6}  (fraction of {} cores)",
            acru, resources.cores
        )
        .unwrap(),
        None => writeln!(out, "acru: unavailable").unwrap(),
    }
    writeln!(out, "warmstart_records_appended: {records_appended}").unwrap();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_csv_roundtrips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        let trace = vec![
            IterationTrace {
                iteration: 0,
                best_u: -82.9,
                diversity: 0.75,
                wall_clock_s: 0.1,
            },
            IterationTrace {
                iteration: 1,
                best_u: -83.0000001,
                diversity: 1e-7,
                wall_clock_s: 0.2,
            },
        ];
        write_trace_csv(&path, &trace).unwrap();
        let rows = read_trace_csv(&path).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0], (0, -82.9, 0.75));
        assert_eq!(rows[1], (1, -83.0000001, 1e-7));
    }

    #[test]
    fn resources_csv_roundtrips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("resources.csv");
        let trace = ResourceTrace {
            samples: vec![(0.5, 0.25), (1.0, 0.5)],
            acru: Some(0.375),
            cores: 2,
        };
        write_resources_csv(&path, &trace).unwrap();
        assert_eq!(read_resources_csv(&path).unwrap(), vec![(0.5, 0.25), (1.0, 0.5)]);
    }

    #[test]
    fn malformed_trace_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        std::fs::write(&path, "iteration,best_u,diversity\n1,2\n").unwrap();
        assert!(read_trace_csv(&path).is_err());
    }
}
