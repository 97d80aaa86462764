//! Warm-start store administration: list records (optionally scored against
//! a query space), prune dominated entries, and import another store file.

use std::fmt::Write as _;
use std::path::Path;

use simopt_core::warmstart::{prune_dominated, rank_records, WarmStartRecord, WarmStartStore};

use crate::config::{load_run_config, Overrides, RunConfig};
use crate::CliError;

fn load_with_warning(store: &WarmStartStore) -> Result<Vec<WarmStartRecord>, CliError> {
    let (records, skipped) = store.load()?;
    if skipped > 0 {
        eprintln!(
            "warning: skipped {skipped} corrupt record(s) in {}",
            store.path().display()
        );
    }
    Ok(records)
}

/// `warmstart-db list`: print one row per record; with a query config, add
/// each record's similarity score against that config's space.
pub fn cmd_list(db: &Path, query_config: Option<&Path>) -> Result<String, CliError> {
    let store = WarmStartStore::open(db);
    let records = load_with_warning(&store)?;
    let query: Option<RunConfig> = query_config
        .map(|p| load_run_config(p, &Overrides::default()))
        .transpose()?;

    let mut out = String::new();
    writeln!(out, "{} record(s) in {}", records.len(), db.display()).unwrap();
    if records.is_empty() {
        return Ok(out);
    }

    match query {
        Some(cfg) => {
            let ranked = rank_records(&records, &cfg.objectives, &cfg.space, false);
            writeln!(out, "idx  js      timestamp_ms   run_id  signature  values").unwrap();
            for score in ranked {
                writeln!(
                    out,
                    "{:<4} {:.4}  {:<13} {}  {}  {}",
                    score.index,
                    score.js,
                    score.record.timestamp_ms,
                    score.record.run_id,
                    score.record.objective_signature.join("+"),
                    format_values(score.record),
                )
                .unwrap();
            }
        }
        None => {
            writeln!(out, "idx  timestamp_ms   run_id  signature  values").unwrap();
            for (i, r) in records.iter().enumerate() {
                writeln!(
                    out,
                    "{:<4} {:<13} {}  {}  {}",
                    i,
                    r.timestamp_ms,
                    r.run_id,
                    r.objective_signature.join("+"),
                    format_values(r),
                )
                .unwrap();
            }
        }
    }
    Ok(out)
}

fn format_values(r: &WarmStartRecord) -> String {
    r.param_values
        .iter()
        .map(|(k, v)| format!("{k}={v:.6}"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// `warmstart-db prune`: drop records dominated within their signature
/// group and rewrite the store.
pub fn cmd_prune(db: &Path) -> Result<String, CliError> {
    let store = WarmStartStore::open(db);
    let records = load_with_warning(&store)?;
    let kept = prune_dominated(&records);
    let dropped = records.len() - kept.len();
    store.rewrite(&kept)?;
    Ok(format!(
        "kept {} record(s), dropped {dropped} dominated record(s)\n",
        kept.len()
    ))
}

/// `warmstart-db import`: append every valid record from another store
/// file; malformed lines produce warnings, never failures.
pub fn cmd_import(db: &Path, input: &Path) -> Result<String, CliError> {
    let source = WarmStartStore::open(input);
    let (records, skipped) = source.load()?;
    if skipped > 0 {
        eprintln!(
            "warning: skipped {skipped} malformed record(s) in {}",
            input.display()
        );
    }
    let store = WarmStartStore::open(db);
    store.append(&records)?;
    Ok(format!(
        "imported {} record(s) from {} ({skipped} skipped)\n",
        records.len(),
        input.display()
    ))
}
