//! Standalone simulator command. Prints exactly one `metric:<name>=<value>`
//! line per measured metric on standard output and nothing else, so any
//! process that can read lines can drive the simulator.

use std::path::PathBuf;

use clap::Args;

use simopt_core::chainsim::{run_simulation, SimConfig};
use simopt_core::param::SimResult;

use crate::config::load_network;
use crate::CliError;

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 1e6)]
    pub block_size_bytes: f64,
    #[arg(long, default_value_t = 600.0)]
    pub interval_s: f64,
    /// Node count. The reference scale is 6000; the default is scaled down
    /// so a 100-block run stays interactive.
    #[arg(long, default_value_t = 600)]
    pub nodes: u32,
    #[arg(long, default_value_t = 100)]
    pub blocks: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON file overriding the regional network model.
    #[arg(long)]
    pub network: Option<PathBuf>,
    #[arg(long, default_value_t = 500.0)]
    pub tx_size_bytes: f64,
    #[arg(long, default_value_t = 40000.0)]
    pub hash_rate: f64,
}

pub fn build_config(args: &SimulateArgs) -> Result<SimConfig, CliError> {
    let mut cfg = SimConfig {
        block_height: args.blocks,
        block_size_bytes: args.block_size_bytes,
        expected_mining_interval_s: args.interval_s,
        avg_hash_rate: args.hash_rate,
        node_count: args.nodes,
        tx_size_bytes: args.tx_size_bytes,
        seed: args.seed,
        ..SimConfig::default()
    };
    if let Some(path) = &args.network {
        cfg.network = load_network(path)?;
    }
    Ok(cfg)
}

pub fn render_metrics(result: &SimResult) -> String {
    let mut out = String::new();
    for (name, value) in &result.values {
        out.push_str(&format!("metric:{name}={value}\n"));
    }
    for (name, value) in &result.diagnostics {
        out.push_str(&format!("metric:{name}={value}\n"));
    }
    out
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<String, CliError> {
    let cfg = build_config(args)?;
    let result = run_simulation(&cfg)?;
    Ok(render_metrics(&result))
}
