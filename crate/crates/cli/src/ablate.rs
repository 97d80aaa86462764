//! Ablation grid: {warm start off/on} x {concurrent evaluation off/on} for
//! each of DE, GA, PSO, with identical seeds, reporting time to convergence
//! and average CPU utilization per run and per group.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use simopt_core::optimizer::Algorithm;

use crate::config::{effective_config_hash, RunConfig, WarmstartSettings};
use crate::runner::execute_run;
use crate::CliError;

/// Group labels in the conventional order: A = baseline, B = warm start
/// only, C = concurrency only, D = both.
pub const GROUPS: [(char, bool, bool); 4] = [
    ('A', false, false),
    ('B', true, false),
    ('C', false, true),
    ('D', true, true),
];

const ALGORITHMS: [Algorithm; 3] = [Algorithm::De, Algorithm::Ga, Algorithm::Pso];

#[derive(Debug, Clone)]
pub struct AblationRow {
    pub replication: usize,
    /// Table-style test name: 1=DE, 2=GA, 3=PSO with the group letter.
    pub test_name: String,
    pub group: char,
    pub algorithm: Algorithm,
    pub warm_start: bool,
    pub concurrent: bool,
    pub toc_s: f64,
    pub acru: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug)]
pub struct AblationOutcome {
    pub rows: Vec<AblationRow>,
    /// Median over replications of the per-replication group-mean ToC.
    pub median_group_toc: BTreeMap<char, f64>,
    /// Median over replications of the per-replication group-mean ACRU.
    pub median_group_acru: BTreeMap<char, f64>,
    pub out_dir: PathBuf,
}

pub fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    values[values.len() / 2]
}

fn test_number(algorithm: Algorithm) -> usize {
    match algorithm {
        Algorithm::De => 1,
        Algorithm::Ga => 2,
        Algorithm::Pso => 3,
    }
}

fn variant(
    base: &RunConfig,
    algorithm: Algorithm,
    seed: u64,
    warm_start: bool,
    concurrent: bool,
    cmp_workers: usize,
    db: &PathBuf,
) -> RunConfig {
    let mut cfg = base.clone();
    cfg.optimizer.algorithm = algorithm;
    cfg.seed = seed;
    cfg.optimizer.seed = seed;
    cfg.warmstart = WarmstartSettings {
        enabled: warm_start,
        db: Some(db.clone()),
        top_n: base.warmstart.top_n,
        strict_coverage: base.warmstart.strict_coverage,
    };
    cfg.cmp_enabled = concurrent;
    cfg.workers = if concurrent { cmp_workers } else { 1 };
    cfg
}

/// Run the full grid `replications` times and write `ablation.csv` and
/// `ablation.txt` under the output directory. Each replication seeds a
/// fresh private store with one prior converged run; the twelve measured
/// runs never write to it, so groups differ only in their toggles.
pub fn cmd_ablate(base: &RunConfig, replications: usize) -> Result<AblationOutcome, CliError> {
    if replications == 0 {
        return Err(CliError::Validation("replications must be at least 1".into()));
    }
    if base.optimizer.population_size < 4 || base.optimizer.population_size % 2 != 0 {
        return Err(CliError::Validation(
            "ablation population must be even and at least 4 so DE and GA both run".into(),
        ));
    }
    std::fs::create_dir_all(&base.out_dir)?;
    let cmp_workers = if base.workers > 1 {
        base.workers
    } else {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(2)
            .max(2)
    };

    let mut rows: Vec<AblationRow> = Vec::new();
    for replication in 0..replications {
        let rep_seed = base.seed.wrapping_add(replication as u64);
        let db = base.out_dir.join(format!("ws-rep{replication}.jsonl"));
        let _ = std::fs::remove_file(&db);

        // Seed the store with one prior converged run (not measured).
        let warmup_seed = simopt_core::seeds::splitmix64(rep_seed ^ 0x5EED_CAFE);
        let warmup = variant(
            base,
            base.optimizer.algorithm,
            warmup_seed,
            false,
            true,
            cmp_workers,
            &db,
        );
        execute_run(&warmup, true)?;

        for algorithm in ALGORITHMS {
            let mut hashes = Vec::new();
            for (group, ws, cmp) in GROUPS {
                let cfg = variant(base, algorithm, rep_seed, ws, cmp, cmp_workers, &db);
                hashes.push(effective_config_hash(&cfg));
                let outcome = execute_run(&cfg, false)?;
                rows.push(AblationRow {
                    replication,
                    test_name: format!(
                        "{}{}",
                        test_number(algorithm),
                        group.to_ascii_lowercase()
                    ),
                    group,
                    algorithm,
                    warm_start: ws,
                    concurrent: cmp,
                    toc_s: outcome.report.wall_time_to_convergence_s,
                    acru: outcome.resources.acru,
                    converged: outcome.report.converged,
                    iterations: outcome.report.iterations_run,
                });
            }
            // Groups must differ only in the warm-start/concurrency toggles.
            if hashes.windows(2).any(|w| w[0] != w[1]) {
                return Err(CliError::Runtime(format!(
                    "ablation symmetry broken for {algorithm}: effective configs differ across groups"
                )));
            }
        }
    }

    let mut median_group_toc = BTreeMap::new();
    let mut median_group_acru = BTreeMap::new();
    for (group, _, _) in GROUPS {
        let mut toc_means = Vec::new();
        let mut acru_means = Vec::new();
        for replication in 0..replications {
            let in_group: Vec<&AblationRow> = rows
                .iter()
                .filter(|r| r.group == group && r.replication == replication)
                .collect();
            toc_means
                .push(in_group.iter().map(|r| r.toc_s).sum::<f64>() / in_group.len() as f64);
            let acrus: Vec<f64> = in_group.iter().filter_map(|r| r.acru).collect();
            if !acrus.is_empty() {
                acru_means.push(acrus.iter().sum::<f64>() / acrus.len() as f64);
            }
        }
        median_group_toc.insert(group, median(toc_means));
        if !acru_means.is_empty() {
            median_group_acru.insert(group, median(acru_means));
        }
    }

    let csv = render_csv(&rows);
    std::fs::write(base.out_dir.join("ablation.csv"), csv)?;
    let table = render_table(&rows, &median_group_toc, &median_group_acru, replications);
    std::fs::write(base.out_dir.join("ablation.txt"), &table)?;
    print!("{table}");

    Ok(AblationOutcome {
        rows,
        median_group_toc,
        median_group_acru,
        out_dir: base.out_dir.clone(),
    })
}

fn render_csv(rows: &[AblationRow]) -> String {
    let mut out =
        String::from("replication,test,group,algorithm,ws,cmp,toc_s,acru,converged,iterations\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.replication,
            r.test_name,
            r.group,
            r.algorithm,
            r.warm_start,
            r.concurrent,
            r.toc_s,
            r.acru.map(|a| a.to_string()).unwrap_or_default(),
            r.converged,
            r.iterations
        )
        .unwrap();
    }
    out
}

fn render_table(
    rows: &[AblationRow],
    median_group_toc: &BTreeMap<char, f64>,
    median_group_acru: &BTreeMap<char, f64>,
    replications: usize,
) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "ablation over {replications} replication(s); medians of per-replication means"
    )
    .unwrap();
    writeln!(out, "group  ws   cmp  toc_s        acru").unwrap();
    for (group, ws, cmp) in GROUPS {
        let acru = median_group_acru
            .get(&group)
            .map(|a| format!("{:.2}%", 100.0 * a))
            .unwrap_or_else(|| "n/a".into());
        writeln!(
            out,
            "{group}      {}  {}  {:<12.3} {acru}",
            if ws { "yes" } else { "no " },
            if cmp { "yes" } else { "no " },
            median_group_toc[&group],
        )
        .unwrap();
    }
    writeln!(out).unwrap();
    writeln!(out, "test  algorithm  group  toc_s        acru").unwrap();
    for (group, _, _) in GROUPS {
        for algorithm in ALGORITHMS {
            let per: Vec<&AblationRow> = rows
                .iter()
                .filter(|r| r.group == group && r.algorithm == algorithm)
                .collect();
            let toc = median(per.iter().map(|r| r.toc_s).collect());
            let acrus: Vec<f64> = per.iter().filter_map(|r| r.acru).collect();
            let acru = if acrus.is_empty() {
                "n/a".to_string()
            } else {
                format!("{:.2}%", 100.0 * median(acrus))
            };
            writeln!(
                out,
                "{}{}    {:<9}  {group}      {toc:<12.3} {acru}",
                test_number(algorithm),
                group.to_ascii_lowercase(),
                algorithm.to_string(),
            )
            .unwrap();
        }
    }
    out
}
